//! File formats: delimited tables, IDX image tensors, selection-probability
//! vectors, gold edge lists, and run reports.

mod alpha;
mod delimited;
mod edges;
mod idx;
mod report;

pub use alpha::{parse_alpha, read_alpha, write_alpha};
pub use delimited::{
    delimiter_for, parse_delimited, parse_matrix, read_delimited, read_matrix, write_delimited, DelimitedOptions,
    Table, TargetColumn, TaskHint,
};
pub use edges::{parse_edges, parse_names, read_edges, read_names, write_edge_ranking};
pub use idx::{parse_idx, read_idx, write_idx, IdxTensor};
pub use report::{format_train_report, read_report, write_report, write_train_report, ReportRow, REPORT_HEADER};

use std::path::Path;

use crate::error::{Error, Result};

pub(crate) fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}

pub(crate) fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}
