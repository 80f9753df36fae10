//! Browser bindings for the coreset demo page in `www/`.
//!
//! The page drives three operations on a [`Demo`]: build a coreset, solve
//! on it and on the full data, and probe the cost gap around the anchor.

pub mod scene;

use wasm_bindgen::prelude::*;

use scene::{origin_code, Method, Scene};

fn js(e: outlier_coreset::Error) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen]
pub struct Demo {
    scene: Scene,
}

#[wasm_bindgen]
impl Demo {
    /// Planar clustering instance with `z` perturbed points.
    pub fn cluster(n: usize, k: usize, z: usize, sigma: f64, seed: u32) -> Result<Demo, JsError> {
        Ok(Demo {
            scene: Scene::cluster(n, k, z, sigma, seed.into()).map_err(js)?,
        })
    }

    /// Line-fitting instance over `x ∈ [0, 10]` with `z` perturbed points.
    pub fn regression(n: usize, z: usize, sigma: f64, seed: u32) -> Result<Demo, JsError> {
        Ok(Demo {
            scene: Scene::regression(n, z, sigma, seed.into()).map_err(js)?,
        })
    }

    #[wasm_bindgen(getter)]
    pub fn is_regression(&self) -> bool {
        self.scene.is_regression()
    }

    #[wasm_bindgen(getter)]
    pub fn z(&self) -> usize {
        self.scene.z()
    }

    #[wasm_bindgen(getter)]
    pub fn k(&self) -> usize {
        self.scene.k()
    }

    /// Interleaved `x, y` of every point.
    pub fn points(&self) -> Vec<f64> {
        self.scene.points().coords().to_vec()
    }

    pub fn outliers(&self) -> Vec<u32> {
        self.scene.outliers().iter().map(|&i| i as u32).collect()
    }

    /// Flat centers, or `[slope, intercept]`.
    pub fn anchor(&self) -> Vec<f64> {
        self.scene.anchor_values()
    }

    /// Last solution found on the coreset; empty before `solve`.
    pub fn solution(&self) -> Vec<f64> {
        self.scene.solution_values().unwrap_or_default()
    }

    pub fn layer_radii(&self) -> Vec<f64> {
        self.scene.layer_radii().to_vec()
    }

    /// Returns `[size, outer, total weight, outliers kept]`.
    pub fn build(
        &mut self,
        method: &str,
        size: usize,
        eps: f64,
        seed: u32,
    ) -> Result<Vec<f64>, JsError> {
        let method: Method = method.parse().map_err(js)?;
        let s = self
            .scene
            .build(method, size, eps, seed.into())
            .map_err(js)?;
        Ok(vec![
            s.size as f64,
            s.outer as f64,
            s.total_weight,
            s.outliers_kept as f64,
        ])
    }

    /// Interleaved `x, y` of the coreset points.
    pub fn coreset_points(&self) -> Vec<f64> {
        self.scene
            .coreset()
            .map(|c| c.data().points().coords().to_vec())
            .unwrap_or_default()
    }

    pub fn coreset_weights(&self) -> Vec<f64> {
        self.scene
            .coreset()
            .map(|c| c.data().weights().to_vec())
            .unwrap_or_default()
    }

    /// Layer index per coreset point; 1000 marks the outer set and 1001 a
    /// uniform sample.
    pub fn coreset_origins(&self) -> Vec<u32> {
        self.scene
            .coreset()
            .map(|c| c.origin().iter().map(|&o| origin_code(o)).collect())
            .unwrap_or_default()
    }

    /// Returns `[coreset solution cost, full solution cost, recall]`, costs
    /// measured on the full data.
    pub fn solve(&mut self) -> Result<Vec<f64>, JsError> {
        let s = self.scene.solve().map_err(js)?;
        Ok(vec![
            s.coreset_solution_cost,
            s.full_solution_cost,
            s.recall,
        ])
    }

    /// Returns `[max error, bound, violations, anchor cost, range]`.
    pub fn probe(&self, range_factor: f64, trials: usize, seed: u32) -> Result<Vec<f64>, JsError> {
        let r = self
            .scene
            .probe(range_factor, trials, seed.into())
            .map_err(js)?;
        Ok(vec![
            r.max_abs_error,
            r.bound,
            r.violations as f64,
            r.anchor_cost,
            range_factor * r.anchor_cost,
        ])
    }
}
