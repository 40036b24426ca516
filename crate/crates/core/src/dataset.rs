//! Directory-backed image datasets with reproducible ordering.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::imageio::load_image_sized;
use crate::tensor::Tensor;

/// An ordered list of PNG paths under one root, decoded on demand to a fixed
/// square size. Ordering is lexicographic by file name so runs reproduce.
#[derive(Debug, Clone)]
pub struct DatasetIndex {
    root: PathBuf,
    paths: Vec<PathBuf>,
    size: usize,
}

impl DatasetIndex {
    pub fn scan(root: &Path, size: usize) -> Result<DatasetIndex> {
        let entries = std::fs::read_dir(root).map_err(|e| Error::io(root, e))?;
        let mut paths: Vec<PathBuf> = Vec::new();
        for entry in entries {
            let entry = entry.map_err(|e| Error::io(root, e))?;
            let path = entry.path();
            let is_png = path
                .extension()
                .map_or(false, |ext| ext.eq_ignore_ascii_case("png"));
            if path.is_file() && is_png {
                paths.push(path);
            }
        }
        if paths.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "no .png files under {}",
                root.display()
            )));
        }
        paths.sort();
        Ok(DatasetIndex {
            root: root.to_path_buf(),
            paths,
            size,
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn path(&self, i: usize) -> &Path {
        &self.paths[i]
    }

    pub fn paths(&self) -> &[PathBuf] {
        &self.paths
    }

    /// Decodes image `i` to `[1, 3, size, size]`.
    pub fn load(&self, i: usize) -> Result<Tensor> {
        load_image_sized(&self.paths[i], self.size)
    }
}
