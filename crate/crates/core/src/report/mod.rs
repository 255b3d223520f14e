//! Output formats: the CSV dialect, SVG diagrams and the run manifest.

pub mod csv;
pub mod manifest;
pub mod svg;

pub use csv::{fmt_g12, Cell, CsvTable};
pub use manifest::{sha256_hex, RunManifest, TOOLKIT_VERSION};
pub use svg::{emit_svg_diagram, Diagram, FormationDiagram, LevelsDiagram, SvgError};
