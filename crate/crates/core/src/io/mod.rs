//! Configuration, mesh files, built-in geometries, VTK output and saved states.

mod builtin;
pub mod config;
pub mod meshfile;
pub mod state;
pub mod vtk;

pub use builtin::{builtin_airfoil_omesh, builtin_channel_bump, builtin_channel_bumps, Bump, BUMP_WIDTH, CHANNEL_X};
pub use config::{parse_config, read_config, RunConfig};
pub use meshfile::{format_mesh, parse_mesh, read_mesh_file, write_mesh_file};
pub use state::{manifests_equivalent, read_manifest, strip_volatile, write_manifest, SavedState};
pub use vtk::{export_vtk, format_vtk, parse_vtk, CellScalar};
