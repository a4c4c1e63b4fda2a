use std::fs;
use std::path::Path;

use fibersis::model::{
    build_design_matrix, parse_vector, DesignMatrix, FiberSpec, ModelSpec, TableVector,
};
use fibersis::{Error, Result};

/// Reads `arg` as a file when such a path exists, otherwise returns it as is.
fn inline_or_file(arg: &str) -> Result<String> {
    let path = Path::new(arg);
    if path.is_file() {
        fs::read_to_string(path).map_err(|e| Error::Parse(format!("{arg}: {e}")))
    } else {
        Ok(arg.to_owned())
    }
}

/// A vector given inline (`1,2,3` or `"1 2 3"`) or as a one-line file.
pub fn load_vector(arg: &str) -> Result<Vec<u64>> {
    parse_vector(&inline_or_file(arg)?)
}

/// A design matrix from a model shorthand or a matrix file.
pub fn load_matrix(model: Option<&str>, matrix: Option<&str>) -> Result<DesignMatrix> {
    match (model, matrix) {
        (Some(spec), None) => match spec.parse::<ModelSpec>() {
            Ok(m) => build_design_matrix(&m),
            Err(_) if Path::new(spec).is_file() => DesignMatrix::parse_text(&inline_or_file(spec)?),
            Err(e) => Err(e),
        },
        (None, Some(path)) => DesignMatrix::parse_text(
            &fs::read_to_string(path).map_err(|e| Error::Parse(format!("{path}: {e}")))?,
        ),
        (Some(_), Some(_)) => Err(Error::Parse(
            "give either --model or --matrix, not both".into(),
        )),
        (None, None) => Err(Error::Parse(
            "one of --model or --matrix is required".into(),
        )),
    }
}

pub fn load_fiber(
    model: Option<&str>,
    matrix: Option<&str>,
    margin: Option<&str>,
    table: Option<&str>,
) -> Result<FiberSpec> {
    let a = load_matrix(model, matrix)?;
    match (margin, table) {
        (Some(b), None) => FiberSpec::new(a, load_vector(b)?),
        (None, Some(t)) => FiberSpec::from_table(a, &TableVector::new(load_vector(t)?)),
        (Some(_), Some(_)) => Err(Error::Parse(
            "give either --margin or --table, not both".into(),
        )),
        (None, None) => Err(Error::Parse(
            "one of --margin or --table is required".into(),
        )),
    }
}
