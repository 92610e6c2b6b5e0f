//! Synthetic crash data with the published marginal structure.
//!
//! Rows are generated class-first: severity counts follow the published
//! 6480/1363/476 proportions exactly (largest-remainder apportionment),
//! then each feature is drawn independently given the severity from the
//! per-level conditional weights, so the expected marginals match the
//! published table. An optional interaction couples lighting and
//! intersection presence for fatal rows, giving tree learners structure
//! that a naive conditional-independence model cannot express.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::table1::{AGE_BANDS, CLASS_TOTALS};
use super::{shuffle, Dataset, FeatureKind, FeatureSchema, Severity};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::stream;

/// Odds multiplier applied to the (Dark-Not lighted, non-intersection)
/// cell of the joint lighting x intersection draw for fatal rows when
/// interactions are enabled.
const DARK_NONINTERSECTION_ODDS: f64 = 2.0;

/// Generate `n` synthetic crash records under the published severity mix.
///
/// Deterministic in `(n, seed, interactions)`: every row draws from its own
/// seed substream, so the result does not depend on thread count or call
/// order. Requires `n >= 100` so every severity gets a sensible share.
pub fn synthesize_table1(n: usize, seed: u64, interactions: bool) -> Result<Dataset> {
    if n < 100 {
        return Err(Error::Config(format!(
            "synthetic dataset needs n >= 100, got {n}"
        )));
    }
    let schema = FeatureSchema::crash();
    let class_counts = super::largest_remainder(&CLASS_TOTALS, n);

    let mut labels = Vec::with_capacity(n);
    for (code, &count) in class_counts.iter().enumerate() {
        labels.extend(std::iter::repeat_n(Severity::from_code(code).unwrap(), count));
    }
    shuffle(&mut labels, &mut stream::rng_for(seed, "labels", &[]));

    // Conditional level weights per feature and severity, in schema order.
    // A feature's weights are used only relative to each other, so a table
    // whose rows do not sum exactly to the class totals still yields a
    // proper distribution.
    let light_idx = schema.index_of("Light").unwrap();
    let intersection_idx = schema.index_of("Intersection").unwrap();
    let weights_by_feature: Vec<Option<[Vec<f64>; 3]>> = schema
        .specs()
        .iter()
        .map(|spec| match spec.kind {
            FeatureKind::Continuous => None,
            _ => {
                let counts = super::table1::feature_counts(&spec.name)
                    .expect("every discrete feature has published counts");
                let per_class = [0, 1, 2].map(|k| {
                    counts
                        .levels
                        .iter()
                        .map(|(_, c)| c[k] as f64)
                        .collect::<Vec<f64>>()
                });
                Some(per_class)
            }
        })
        .collect();

    let mut matrix = Matrix::zeros(n, schema.len());
    for (i, label) in labels.iter().enumerate() {
        let mut rng = stream::rng_for(seed, "row", &[i as u64]);
        let k = label.code();
        let couple = interactions && *label == Severity::Fatal;
        let mut coupled_light_code: Option<f64> = None;
        for (j, spec) in schema.specs().iter().enumerate() {
            let value = if spec.kind == FeatureKind::Continuous {
                let band_weights: Vec<f64> =
                    AGE_BANDS.iter().map(|(_, _, c)| c[k] as f64).collect();
                let (lo, hi, _) = AGE_BANDS[weighted(&mut rng, &band_weights)];
                lo + rng.random::<f64>() * (hi - lo)
            } else if couple && j == intersection_idx {
                // Joint draw over (light, intersection) cells, boosting
                // dark-unlit non-intersection; the light value is stored
                // and consumed when its column comes up.
                let light_w = &weights_by_feature[light_idx].as_ref().unwrap()[k];
                let int_spec = &schema.specs()[intersection_idx];
                let int_w = &weights_by_feature[intersection_idx].as_ref().unwrap()[k];
                let mut cells = Vec::with_capacity(light_w.len() * int_w.len());
                for (li, lw) in light_w.iter().enumerate() {
                    for (ii, iw) in int_w.iter().enumerate() {
                        let mut w = lw * iw;
                        let dark_unlit = li == 0;
                        let non_intersection = int_spec.levels[ii].name == "No";
                        if dark_unlit && non_intersection {
                            w *= DARK_NONINTERSECTION_ODDS;
                        }
                        cells.push(w);
                    }
                }
                let cell = weighted(&mut rng, &cells);
                let (li, ii) = (cell / int_w.len(), cell % int_w.len());
                coupled_light_code = Some(schema.specs()[light_idx].levels[li].code);
                int_spec.levels[ii].code
            } else if couple && j == light_idx {
                coupled_light_code.expect("intersection column precedes light")
            } else {
                let w = &weights_by_feature[j].as_ref().unwrap()[k];
                spec.levels[weighted(&mut rng, w)].code
            };
            matrix.set(i, j, value);
        }
    }

    Dataset::from_parts(matrix, labels, schema)
}

/// Draw an index with probability proportional to `weights`.
fn weighted(rng: &mut ChaCha8Rng, weights: &[f64]) -> usize {
    let total: f64 = weights.iter().sum();
    debug_assert!(total > 0.0);
    let u = rng.random::<f64>() * total;
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    weights.len() - 1
}
