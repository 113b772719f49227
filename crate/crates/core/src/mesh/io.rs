use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{build_mesh, Mesh, Point};
use crate::error::Result;

/// On-disk mesh layout: `{"vertices": [[x, y], ...], "cells": [[i0, i1, ...], ...]}`.
///
/// Interfaces are never stored; they are recomputed by [`build_mesh`] on load.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshFile {
    pub vertices: Vec<[f64; 2]>,
    pub cells: Vec<Vec<usize>>,
}

impl MeshFile {
    pub fn into_mesh(self) -> Result<Mesh> {
        let vertices = self.vertices.into_iter().map(|[x, y]| Point::new(x, y)).collect();
        build_mesh(vertices, self.cells)
    }
}

impl Mesh {
    pub fn from_json_slice(bytes: &[u8]) -> Result<Mesh> {
        let file: MeshFile = serde_json::from_slice(bytes)?;
        file.into_mesh()
    }

    pub fn from_json_str(s: &str) -> Result<Mesh> {
        Self::from_json_slice(s.as_bytes())
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string(&self.to_file()).expect("mesh file serialization is infallible")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Mesh> {
        Self::from_json_slice(&std::fs::read(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json_string())?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::mesh::generate_hybrid;

    #[test]
    fn round_trip_is_bitwise() {
        let m = generate_hybrid(4).unwrap();
        let back = Mesh::from_json_str(&m.to_json_string()).unwrap();
        assert_eq!(back.to_file(), m.to_file());
        assert_eq!(back.interfaces.len(), m.interfaces.len());
    }

    #[test]
    fn malformed_json() {
        assert!(matches!(Mesh::from_json_str("{"), Err(Error::Json(_))));
        assert!(matches!(
            Mesh::from_json_str(r#"{"vertices": [[0,0]], "cells": [], "interfaces": []}"#),
            Err(Error::Json(_))
        ));
        assert!(matches!(
            Mesh::from_json_str(r#"{"vertices": [[0,0],[1,0],[0,1]], "cells": []}"#),
            Err(Error::EmptyMesh)
        ));
    }
}
