use wasm_bindgen::prelude::*;

use crate::{parse_variant, MaskScene, MaskView, SweepScene, SWEEP_HEIGHT, SWEEP_WIDTH};

fn js(e: mfdepth::Error) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen(js_name = overfitCurve)]
#[allow(clippy::too_many_arguments)]
pub fn overfit_curve(
    camera_speed: f64,
    depth: f64,
    u: f64,
    v: f64,
    speed_min: f64,
    speed_max: f64,
    steps: usize,
) -> Result<Vec<f64>, JsError> {
    crate::overfit_curve(camera_speed, depth, u, v, speed_min, speed_max, steps).map_err(js)
}

#[wasm_bindgen]
pub struct MaskDemo(MaskScene);

#[wasm_bindgen]
impl MaskDemo {
    #[wasm_bindgen(constructor)]
    pub fn new(variant: &str) -> Result<MaskDemo, JsError> {
        let v = parse_variant(variant).ok_or_else(|| JsError::new(&format!("unknown variant {variant}")))?;
        MaskScene::new(v).map(MaskDemo).map_err(js)
    }

    #[wasm_bindgen(getter)]
    pub fn width(&self) -> usize {
        self.0.width
    }

    #[wasm_bindgen(getter)]
    pub fn height(&self) -> usize {
        self.0.height
    }

    #[wasm_bindgen(js_name = overfitPreview)]
    pub fn overfit_preview(&self) -> Result<Vec<u8>, JsError> {
        self.0.overfit_preview().map_err(js)
    }

    pub fn masks(&self, co: f64, con: f64) -> Result<MaskResult, JsError> {
        self.0.view(co, con).map(MaskResult).map_err(js)
    }
}

#[wasm_bindgen]
pub struct MaskResult(MaskView);

#[wasm_bindgen]
impl MaskResult {
    #[wasm_bindgen(getter)]
    pub fn rgba(&self) -> Vec<u8> {
        self.0.rgba.clone()
    }

    #[wasm_bindgen(getter, js_name = mCo)]
    pub fn m_co(&self) -> usize {
        self.0.m_co
    }

    #[wasm_bindgen(getter, js_name = mCon)]
    pub fn m_con(&self) -> usize {
        self.0.m_con
    }

    #[wasm_bindgen(getter, js_name = mI)]
    pub fn m_i(&self) -> usize {
        self.0.m_i
    }

    #[wasm_bindgen(getter)]
    pub fn movers(&self) -> usize {
        self.0.movers
    }

    #[wasm_bindgen(getter)]
    pub fn recall(&self) -> f64 {
        self.0.recall
    }

    #[wasm_bindgen(getter)]
    pub fn precision(&self) -> f64 {
        self.0.precision
    }
}

#[wasm_bindgen]
pub struct SweepDemo(SweepScene);

#[wasm_bindgen]
impl SweepDemo {
    #[wasm_bindgen(constructor)]
    pub fn new(baseline: f64) -> Result<SweepDemo, JsError> {
        SweepScene::new(baseline).map(SweepDemo).map_err(js)
    }

    #[wasm_bindgen(getter)]
    pub fn width(&self) -> usize {
        SWEEP_WIDTH
    }

    #[wasm_bindgen(getter)]
    pub fn height(&self) -> usize {
        SWEEP_HEIGHT
    }

    pub fn image(&self) -> Vec<u8> {
        crate::to_rgba(&self.0.image)
    }

    #[wasm_bindgen(js_name = hintPreview)]
    pub fn hint_preview(&self) -> Result<Vec<u8>, JsError> {
        Ok(crate::to_rgba(&mfdepth::io::depth_preview(&self.0.hints).map_err(js)?))
    }

    /// `[true depth, hint, d_0, c_0, d_1, c_1, …]`; missing values are `NaN`.
    pub fn profile(&self, row: usize, col: usize) -> Vec<f64> {
        let p = self.0.profile(row, col);
        let mut out = vec![p.true_depth.unwrap_or(f64::NAN), p.hint.unwrap_or(f64::NAN)];
        for (d, c) in p.depths.iter().zip(&p.costs) {
            out.extend([*d, *c]);
        }
        out
    }
}
