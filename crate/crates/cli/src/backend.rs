use std::path::PathBuf;

use ndd::backend::onnx::OnnxBackend;
use ndd::backend::toy::NgramOracle;
use ndd::backend::MlmBackend;
use serde_json::{json, Value};

use crate::args::{BackendKind, GlobalArgs};
use crate::error::{CliError, CliResult};

pub const MODEL_ENV: &str = "NDD_MODEL_DIR";

/// Where the backend comes from, resolved before anything is loaded.
#[derive(Debug, Clone, PartialEq)]
pub enum BackendChoice {
    Toy,
    Onnx(PathBuf),
}

impl BackendChoice {
    pub fn resolve(args: &GlobalArgs, env_model: Option<PathBuf>) -> CliResult<Self> {
        match (args.backend, &args.model) {
            (Some(BackendKind::Toy), Some(_)) => Err(CliError::config(
                "--model selects the onnx backend and cannot be combined with --backend toy",
            )),
            (Some(BackendKind::Toy), None) => Ok(BackendChoice::Toy),
            (_, Some(dir)) => Ok(BackendChoice::Onnx(dir.clone())),
            (backend, None) => match env_model {
                Some(dir) => Ok(BackendChoice::Onnx(dir)),
                None if backend == Some(BackendKind::Onnx) => Err(CliError::config(format!(
                    "the onnx backend needs --model or ${MODEL_ENV}"
                ))),
                None => Err(CliError::config(format!(
                    "no backend selected; pass --backend toy, --model <dir> or set ${MODEL_ENV}"
                ))),
            },
        }
    }

    pub fn load(&self) -> CliResult<Box<dyn MlmBackend>> {
        match self {
            BackendChoice::Toy => Ok(Box::new(NgramOracle::embedded())),
            BackendChoice::Onnx(dir) => OnnxBackend::load(dir)
                .map(|b| Box::new(b) as Box<dyn MlmBackend>)
                .map_err(|e| CliError::backend(format!("loading {}: {e}", dir.display()))),
        }
    }

    pub fn describe(&self) -> Value {
        match self {
            BackendChoice::Toy => json!({ "kind": "toy" }),
            BackendChoice::Onnx(dir) => json!({ "kind": "onnx", "model": dir }),
        }
    }
}
