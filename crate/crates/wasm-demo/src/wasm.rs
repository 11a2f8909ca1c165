use fusekit::efficiency::CostModelInputs;
use serde::Serialize;
use wasm_bindgen::prelude::*;

use crate::{cost_report, parse_norm, Explorer};

fn js_err(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

fn to_json<T: Serialize>(value: &T) -> Result<String, JsError> {
    serde_json::to_string(value).map_err(js_err)
}

#[wasm_bindgen]
pub struct Demo(Explorer);

#[wasm_bindgen]
impl Demo {
    #[wasm_bindgen(constructor)]
    pub fn new(seed: u32) -> Result<Demo, JsError> {
        Explorer::new(seed.into()).map(Demo).map_err(js_err)
    }

    pub fn queries(&self) -> Result<String, JsError> {
        to_json(&self.0.queries())
    }

    pub fn sweep(&self, step: f64) -> Result<String, JsError> {
        to_json(&self.0.sweep(step).map_err(js_err)?)
    }

    pub fn inspect(&self, query: &str, alpha: f64, norm: &str) -> Result<String, JsError> {
        let norm = parse_norm(norm).map_err(js_err)?;
        to_json(&self.0.inspect(query, alpha, norm).map_err(js_err)?)
    }

    pub fn histograms(&self, norm: &str, bins: usize) -> Result<String, JsError> {
        let norm = parse_norm(norm).map_err(js_err)?;
        to_json(&self.0.histograms(norm, bins).map_err(js_err)?)
    }

    pub fn percentile(&self, system: &str, score: f64) -> Result<f64, JsError> {
        self.0.percentile(system, score).map_err(js_err)
    }

    /// `[min, max]` of a system's raw scores.
    #[wasm_bindgen(js_name = scoreRange)]
    pub fn score_range(&self, system: &str) -> Result<Vec<f64>, JsError> {
        let (lo, hi) = self
            .0
            .score_range(system)
            .ok_or_else(|| js_err(format!("unknown system `{system}`")))?;
        Ok(vec![lo, hi])
    }
}

/// Cost model from a JSON object of inputs; absent fields take the defaults.
#[wasm_bindgen(js_name = costModel)]
pub fn cost_model(inputs: &str) -> Result<String, JsError> {
    let inputs: CostModelInputs = serde_json::from_str(inputs).map_err(js_err)?;
    to_json(&cost_report(inputs).map_err(js_err)?)
}

#[wasm_bindgen(js_name = defaultCostInputs)]
pub fn default_cost_inputs() -> Result<String, JsError> {
    to_json(&CostModelInputs::default())
}
