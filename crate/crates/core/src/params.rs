//! Model-agnostic parameter sets, for code that handles either model.

use serde::{Deserialize, Serialize};

use crate::crra_model::{CrraModel, CrraParams, Violation};
use crate::log_model::{LogModel, LogParams};
use crate::model::{GrowthModel, ModelTag, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum ModelParams {
    Crra(CrraParams),
    Log(LogParams),
}

impl ModelParams {
    pub fn tag(&self) -> ModelTag {
        match self {
            ModelParams::Crra(_) => ModelTag::Crra,
            ModelParams::Log(_) => ModelTag::Log,
        }
    }

    pub fn validate(&self) -> Vec<Violation> {
        match self {
            ModelParams::Crra(p) => p.validate(),
            ModelParams::Log(p) => p.validate(),
        }
    }

    pub fn constraints(&self) -> &'static [&'static str] {
        match self {
            ModelParams::Crra(_) => &CrraParams::CONSTRAINTS,
            ModelParams::Log(_) => &LogParams::CONSTRAINTS,
        }
    }

    pub fn build(&self) -> Result<AnyModel> {
        Ok(match self {
            ModelParams::Crra(p) => AnyModel::Crra(CrraModel::new(*p)?),
            ModelParams::Log(p) => AnyModel::Log(LogModel::new(*p)?),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AnyModel {
    Crra(CrraModel),
    Log(LogModel),
}

impl AnyModel {
    pub fn as_dyn(&self) -> &(dyn GrowthModel + 'static) {
        match self {
            AnyModel::Crra(m) => m,
            AnyModel::Log(m) => m,
        }
    }
}

impl std::ops::Deref for AnyModel {
    type Target = dyn GrowthModel + 'static;

    fn deref(&self) -> &Self::Target {
        self.as_dyn()
    }
}
