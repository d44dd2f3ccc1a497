use crate::nn::{ConvParams, DenseParams, Layer, Pool2, Shape};

use super::ModelError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Linear,
    Relu,
    /// Output-layer softmax; realized by the loss and by prediction rather
    /// than as a network stage.
    Softmax,
}

/// One architectural layer as declared, before parameters exist.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LayerSpec {
    Conv {
        kernel: (usize, usize),
        filters: usize,
        activation: Activation,
    },
    MaxPool(Pool2),
    AvgPool(Pool2),
    Flatten,
    Dense {
        units: usize,
        activation: Activation,
        dropout: f64,
    },
}

impl LayerSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            LayerSpec::Conv { .. } => "conv",
            LayerSpec::MaxPool(_) => "maxpool",
            LayerSpec::AvgPool(_) => "avgpool",
            LayerSpec::Flatten => "flatten",
            LayerSpec::Dense { .. } => "dense",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkSpec {
    pub input: Shape,
    pub layers: Vec<LayerSpec>,
}

/// The expression classifier for an 80×100 grayscale input:
///
/// ```text
/// conv 5x5x64 relu -> maxpool 5x5/2
/// conv 3x3x64 relu -> conv 3x3x64 relu -> avgpool 3x3/2
/// conv 3x3x128 relu -> conv 3x3x128 relu -> avgpool 3x3/2
/// flatten -> 3 x (dense 1024 relu, dropout 0.2) -> dense 7 softmax
/// ```
pub fn build_paper_network() -> NetworkSpec {
    build_paper_network_for(Shape::new(80, 100, 1))
}

/// The same layer stack over a different input shape.
pub fn build_paper_network_for(input: Shape) -> NetworkSpec {
    let conv = |k: usize, filters: usize| LayerSpec::Conv {
        kernel: (k, k),
        filters,
        activation: Activation::Relu,
    };
    let hidden = LayerSpec::Dense {
        units: 1024,
        activation: Activation::Relu,
        dropout: 0.2,
    };
    NetworkSpec {
        input,
        layers: vec![
            conv(5, 64),
            LayerSpec::MaxPool(Pool2::new((5, 5), (2, 2))),
            conv(3, 64),
            conv(3, 64),
            LayerSpec::AvgPool(Pool2::new((3, 3), (2, 2))),
            conv(3, 128),
            conv(3, 128),
            LayerSpec::AvgPool(Pool2::new((3, 3), (2, 2))),
            LayerSpec::Flatten,
            hidden,
            hidden,
            hidden,
            LayerSpec::Dense {
                units: 7,
                activation: Activation::Softmax,
                dropout: 0.0,
            },
        ],
    }
}

fn layer_output(layer: &LayerSpec, input: Shape) -> Result<Shape, String> {
    match *layer {
        LayerSpec::Conv { kernel, filters, .. } => {
            if filters == 0 {
                return Err("conv needs at least one filter".into());
            }
            ConvParams::zeros(kernel.0, kernel.1, input.channels, 0)
                .output_shape(input)
                .map(|s| Shape::new(s.d1, s.d2, filters))
                .map_err(|e| e.to_string())
        }
        LayerSpec::MaxPool(p) | LayerSpec::AvgPool(p) => p.output_shape(input).map_err(|e| e.to_string()),
        LayerSpec::Flatten => Ok(Shape::vector(input.len())),
        LayerSpec::Dense { units, dropout, .. } => {
            if !input.is_vector() {
                return Err(format!("dense needs a flattened input, got {input}"));
            }
            if units == 0 {
                return Err("dense needs at least one unit".into());
            }
            if !(0.0..1.0).contains(&dropout) {
                return Err(format!("dropout rate {dropout} outside [0, 1)"));
            }
            Ok(Shape::vector(units))
        }
    }
}

/// Shape after each declared layer.
pub fn infer_shapes(spec: &NetworkSpec) -> Result<Vec<Shape>, ModelError> {
    let mut cur = spec.input;
    let last = spec.layers.len().saturating_sub(1);
    spec.layers
        .iter()
        .enumerate()
        .map(|(k, layer)| {
            if let LayerSpec::Conv { activation: Activation::Softmax, .. } = layer {
                return Err(ModelError::Shape(format!("layer {k} (conv): softmax is only valid on the final dense layer")));
            }
            if let LayerSpec::Dense { activation: Activation::Softmax, .. } = layer {
                if k != last {
                    return Err(ModelError::Shape(format!(
                        "layer {k} (dense): softmax is only valid on the final layer"
                    )));
                }
            }
            cur = layer_output(layer, cur).map_err(|e| ModelError::Shape(format!("layer {k} ({}): {e}", layer.kind())))?;
            Ok(cur)
        })
        .collect()
}

/// Expands declared layers into executable stages with the given parameter
/// initializers.
pub(crate) fn realize(
    spec: &NetworkSpec,
    mut conv: impl FnMut(usize, usize, usize, usize) -> ConvParams,
    mut dense: impl FnMut(usize, usize) -> DenseParams,
) -> Result<Vec<Layer>, ModelError> {
    let shapes = infer_shapes(spec)?;
    let mut cur = spec.input;
    let mut out = Vec::new();
    for (layer, next) in spec.layers.iter().zip(shapes) {
        match *layer {
            LayerSpec::Conv { kernel, filters, activation } => {
                out.push(Layer::Conv(conv(kernel.0, kernel.1, cur.channels, filters)));
                if activation == Activation::Relu {
                    out.push(Layer::Relu);
                }
            }
            LayerSpec::MaxPool(p) => out.push(Layer::MaxPool(p)),
            LayerSpec::AvgPool(p) => out.push(Layer::AvgPool(p)),
            LayerSpec::Flatten => out.push(Layer::Flatten),
            LayerSpec::Dense { units, activation, dropout } => {
                out.push(Layer::Dense(dense(cur.len(), units)));
                if activation == Activation::Relu {
                    out.push(Layer::Relu);
                }
                if dropout > 0.0 {
                    out.push(Layer::Dropout(dropout));
                }
            }
        }
        cur = next;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_spec_keeps_input() {
        let spec = NetworkSpec {
            input: Shape::new(4, 5, 1),
            layers: vec![],
        };
        assert!(infer_shapes(&spec).unwrap().is_empty());
    }

    #[test]
    fn single_conv() {
        let spec = NetworkSpec {
            input: Shape::new(10, 10, 1),
            layers: vec![LayerSpec::Conv {
                kernel: (3, 3),
                filters: 8,
                activation: Activation::Relu,
            }],
        };
        assert_eq!(infer_shapes(&spec).unwrap(), vec![Shape::new(8, 8, 8)]);
    }

    #[test]
    fn error_names_layer() {
        let err = infer_shapes(&build_paper_network_for(Shape::new(20, 24, 1))).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("layer 4 (avgpool)"), "{msg}");
    }

    #[test]
    fn dense_before_flatten_rejected() {
        let spec = NetworkSpec {
            input: Shape::new(3, 3, 1),
            layers: vec![LayerSpec::Dense {
                units: 2,
                activation: Activation::Linear,
                dropout: 0.0,
            }],
        };
        assert!(infer_shapes(&spec).is_err());
    }
}
