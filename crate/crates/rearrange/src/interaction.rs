//! Interaction-graph representation of the robot-object system and its
//! graph-embedding forward pass.
//!
//! The graph has nine nodes (quadruped base, six arm joints, end-effector,
//! object) with 15-dim features, and 28 directed edges (14 bidirectional
//! pairs) carrying relative-pose features. Two EdgeConv layers with max
//! aggregation, global mean pooling, and a readout perceptron produce a
//! 128-dim graph-level feature. Weights are seeded-random or loaded from a
//! flat binary file; no training happens here.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

pub const NODE_COUNT: usize = 9;
pub const NODE_FEATURE_DIM: usize = 15;
pub const RAW_PAD_DIM: usize = 11;
pub const NODE_TYPE_COUNT: usize = 4;
pub const EDGE_FEATURE_DIM: usize = 7;
pub const DIRECTED_EDGE_COUNT: usize = 28;
pub const EMBED_DIM: usize = 128;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("malformed state: {0}")]
    MalformedState(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("weight file error: {0}")]
    WeightFile(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Unit quaternion in (w, x, y, z) order with the Hamilton product.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quat {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Quat {
    pub fn identity() -> Quat {
        Quat {
            w: 1.0,
            x: 0.0,
            y: 0.0,
            z: 0.0,
        }
    }

    pub fn from_yaw(yaw: f64) -> Quat {
        Quat {
            w: (yaw / 2.0).cos(),
            x: 0.0,
            y: 0.0,
            z: (yaw / 2.0).sin(),
        }
    }

    pub fn norm(&self) -> f64 {
        (self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    /// Inverse of a unit quaternion (its conjugate).
    pub fn inverse(&self) -> Quat {
        Quat {
            w: self.w,
            x: -self.x,
            y: -self.y,
            z: -self.z,
        }
    }

    /// Hamilton product `self * rhs`.
    pub fn mul(&self, rhs: &Quat) -> Quat {
        Quat {
            w: self.w * rhs.w - self.x * rhs.x - self.y * rhs.y - self.z * rhs.z,
            x: self.w * rhs.x + self.x * rhs.w + self.y * rhs.z - self.z * rhs.y,
            y: self.w * rhs.y - self.x * rhs.z + self.y * rhs.w + self.z * rhs.x,
            z: self.w * rhs.z + self.x * rhs.y - self.y * rhs.x + self.z * rhs.w,
        }
    }
}

/// Spatial pose: position plus unit quaternion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose3 {
    pub position: [f64; 3],
    pub orientation: Quat,
}

impl Pose3 {
    pub fn identity() -> Pose3 {
        Pose3 {
            position: [0.0; 3],
            orientation: Quat::identity(),
        }
    }

    fn as_seven(&self) -> [f64; 7] {
        [
            self.position[0],
            self.position[1],
            self.position[2],
            self.orientation.w,
            self.orientation.x,
            self.orientation.y,
            self.orientation.z,
        ]
    }
}

/// Quadruped base node input: planar orientation and angular velocity.
#[derive(Debug, Clone, Copy)]
pub struct BaseState {
    pub planar_orientation: [f64; 2],
    pub angular_velocity: [f64; 3],
}

/// Arm joint node input: link pose relative to the base plus joint scalars.
#[derive(Debug, Clone, Copy)]
pub struct JointState {
    pub rel_pose: Pose3,
    pub angle: f64,
    pub default_angle: f64,
    pub velocity: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct EndEffectorState {
    pub rel_pose: Pose3,
    pub contact: bool,
}

/// Object node input: pose of the geometric center in the base frame and
/// the commanded planar velocity `(v_x, v_y, omega_z)`.
#[derive(Debug, Clone, Copy)]
pub struct ObjectNodeState {
    pub rel_pose: Pose3,
    pub velocity_command: [f64; 3],
}

#[derive(Debug, Clone)]
pub struct GraphInput {
    pub base: BaseState,
    pub joints: Vec<JointState>,
    pub end_effector: EndEffectorState,
    pub object: ObjectNodeState,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeType {
    Base = 0,
    Joint = 1,
    EndEffector = 2,
    Object = 3,
}

#[derive(Debug, Clone)]
pub struct DirectedEdge {
    pub src: usize,
    pub dst: usize,
    pub feature: [f64; EDGE_FEATURE_DIM],
}

#[derive(Debug, Clone)]
pub struct InteractionGraph {
    /// Node features, `NODE_COUNT` rows of `NODE_FEATURE_DIM`.
    pub nodes: Vec<Vec<f64>>,
    pub directed_edges: Vec<DirectedEdge>,
    pub node_types: Vec<NodeType>,
}

impl InteractionGraph {
    /// Incoming-neighbor set of a node, ascending.
    pub fn incoming_neighbors(&self, node: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .directed_edges
            .iter()
            .filter(|e| e.dst == node)
            .map(|e| e.src)
            .collect();
        out.sort_unstable();
        out
    }
}

/// The undirected edge pairs: base to every arm node and the end-effector,
/// the serial arm chain, and end-effector to object.
fn undirected_edges() -> Vec<(usize, usize)> {
    let mut edges = Vec::with_capacity(14);
    for j in 1..=7 {
        edges.push((0, j));
    }
    for j in 1..=6 {
        edges.push((j, j + 1));
    }
    edges.push((7, 8));
    edges
}

fn pad_with_type(raw: &[f64], node_type: NodeType) -> Vec<f64> {
    let mut f = vec![0.0; NODE_FEATURE_DIM];
    f[..raw.len()].copy_from_slice(raw);
    f[RAW_PAD_DIM + node_type as usize] = 1.0;
    f
}

/// Relative-pose edge feature in the message direction `src -> dst`:
/// `[p_dst - p_src, q_dst * q_src^-1]`.
fn edge_feature(poses: &[Pose3], src: usize, dst: usize) -> [f64; EDGE_FEATURE_DIM] {
    let pi = poses[dst].position;
    let pj = poses[src].position;
    let q = poses[dst].orientation.mul(&poses[src].orientation.inverse());
    [
        pi[0] - pj[0],
        pi[1] - pj[1],
        pi[2] - pj[2],
        q.w,
        q.x,
        q.y,
        q.z,
    ]
}

/// Assembles the nine-node interaction graph from the raw state.
///
/// Node features follow the fixed layout (raw features, zero padding to 11,
/// one-hot type in slots 11..15); edge features are computed per directed
/// edge. The base node carries the identity pose.
pub fn build_graph(input: &GraphInput) -> Result<InteractionGraph, GraphError> {
    if input.joints.len() != 6 {
        return Err(GraphError::MalformedState(format!(
            "expected 6 joints, got {}",
            input.joints.len()
        )));
    }
    let mut poses = vec![Pose3::identity()];
    for j in &input.joints {
        poses.push(j.rel_pose);
    }
    poses.push(input.end_effector.rel_pose);
    poses.push(input.object.rel_pose);
    for (i, p) in poses.iter().enumerate() {
        let n = p.orientation.norm();
        if (n - 1.0).abs() > 1e-9 {
            return Err(GraphError::MalformedState(format!(
                "node {i} quaternion norm {n} is not unit"
            )));
        }
    }

    let mut nodes = Vec::with_capacity(NODE_COUNT);
    let mut node_types = Vec::with_capacity(NODE_COUNT);
    let base_raw = [
        input.base.planar_orientation[0],
        input.base.planar_orientation[1],
        input.base.angular_velocity[0],
        input.base.angular_velocity[1],
        input.base.angular_velocity[2],
    ];
    nodes.push(pad_with_type(&base_raw, NodeType::Base));
    node_types.push(NodeType::Base);
    for j in &input.joints {
        let mut raw = Vec::with_capacity(11);
        raw.extend_from_slice(&j.rel_pose.as_seven());
        raw.push(j.angle);
        raw.push(j.default_angle);
        raw.push(j.angle - j.default_angle);
        raw.push(j.velocity);
        nodes.push(pad_with_type(&raw, NodeType::Joint));
        node_types.push(NodeType::Joint);
    }
    let mut ee_raw = Vec::with_capacity(8);
    ee_raw.extend_from_slice(&input.end_effector.rel_pose.as_seven());
    ee_raw.push(if input.end_effector.contact { 1.0 } else { 0.0 });
    nodes.push(pad_with_type(&ee_raw, NodeType::EndEffector));
    node_types.push(NodeType::EndEffector);
    let mut obj_raw = Vec::with_capacity(10);
    obj_raw.extend_from_slice(&input.object.rel_pose.as_seven());
    obj_raw.extend_from_slice(&input.object.velocity_command);
    nodes.push(pad_with_type(&obj_raw, NodeType::Object));
    node_types.push(NodeType::Object);

    let mut directed_edges = Vec::with_capacity(DIRECTED_EDGE_COUNT);
    for (a, b) in undirected_edges() {
        directed_edges.push(DirectedEdge {
            src: a,
            dst: b,
            feature: edge_feature(&poses, a, b),
        });
        directed_edges.push(DirectedEdge {
            src: b,
            dst: a,
            feature: edge_feature(&poses, b, a),
        });
    }

    Ok(InteractionGraph {
        nodes,
        directed_edges,
        node_types,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Elu,
    Relu,
    Tanh,
}

impl Activation {
    fn apply(&self, x: f64) -> f64 {
        match self {
            Activation::Elu => {
                if x > 0.0 {
                    x
                } else {
                    x.exp() - 1.0
                }
            }
            Activation::Relu => x.max(0.0),
            Activation::Tanh => x.tanh(),
        }
    }
}

/// Dense layer: `y = W x + b` with `W` stored row-major `[out][in]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Linear {
    pub weight: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
}

impl Linear {
    pub fn zeros(input: usize, output: usize) -> Linear {
        Linear {
            weight: vec![vec![0.0; input]; output],
            bias: vec![0.0; output],
        }
    }

    fn seeded(input: usize, output: usize, rng: &mut ChaCha8Rng) -> Linear {
        // Xavier-uniform; drawn in f32 so file round-trips are lossless
        let bound = (6.0 / (input + output) as f64).sqrt() as f32;
        let weight = (0..output)
            .map(|_| {
                (0..input)
                    .map(|_| rng.gen_range(-bound..bound) as f64)
                    .collect()
            })
            .collect();
        Linear {
            weight,
            bias: vec![0.0; output],
        }
    }

    pub fn input_dim(&self) -> usize {
        self.weight.first().map_or(0, |r| r.len())
    }

    pub fn output_dim(&self) -> usize {
        self.weight.len()
    }

    fn forward(&self, x: &[f64]) -> Result<Vec<f64>, GraphError> {
        if x.len() != self.input_dim() {
            return Err(GraphError::DimensionMismatch(format!(
                "linear layer expects {} inputs, got {}",
                self.input_dim(),
                x.len()
            )));
        }
        Ok(self
            .weight
            .iter()
            .zip(&self.bias)
            .map(|(row, b)| row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + b)
            .collect())
    }
}

/// Perceptron with activation on all but the final layer.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub layers: Vec<Linear>,
    pub activation: Activation,
}

impl Mlp {
    pub fn seeded(dims: &[usize], activation: Activation, rng: &mut ChaCha8Rng) -> Mlp {
        let layers = dims
            .windows(2)
            .map(|w| Linear::seeded(w[0], w[1], rng))
            .collect();
        Mlp { layers, activation }
    }

    pub fn input_dim(&self) -> usize {
        self.layers.first().map_or(0, Linear::input_dim)
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, Linear::output_dim)
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>, GraphError> {
        let mut h = x.to_vec();
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            h = layer.forward(&h)?;
            if i != last {
                for v in &mut h {
                    *v = self.activation.apply(*v);
                }
            }
        }
        Ok(h)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GnnConfig {
    pub hidden_dim: usize,
    pub message_dim: usize,
    pub activation: Activation,
}

impl Default for GnnConfig {
    fn default() -> Self {
        Self {
            hidden_dim: 64,
            message_dim: 64,
            activation: Activation::Elu,
        }
    }
}

/// Two EdgeConv layers plus the readout perceptron mapping the pooled
/// feature to the 128-dim embedding.
#[derive(Debug, Clone, PartialEq)]
pub struct GnnWeights {
    pub layer1: Mlp,
    pub layer2: Mlp,
    pub readout: Mlp,
    pub config: GnnConfig,
}

impl GnnWeights {
    pub fn seeded(config: GnnConfig, seed: u64) -> GnnWeights {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = config.hidden_dim;
        let m = config.message_dim;
        let layer1 = Mlp::seeded(
            &[2 * NODE_FEATURE_DIM + EDGE_FEATURE_DIM, h, h, m],
            config.activation,
            &mut rng,
        );
        let layer2 = Mlp::seeded(
            &[2 * m + EDGE_FEATURE_DIM, h, h, m],
            config.activation,
            &mut rng,
        );
        let readout = Mlp::seeded(&[m, h, h, EMBED_DIM], config.activation, &mut rng);
        GnnWeights {
            layer1,
            layer2,
            readout,
            config,
        }
    }

    fn matrices(&self) -> Vec<(&Vec<Vec<f64>>, &Vec<f64>)> {
        [&self.layer1, &self.layer2, &self.readout]
            .iter()
            .flat_map(|mlp| mlp.layers.iter().map(|l| (&l.weight, &l.bias)))
            .collect()
    }

    /// Serializes as little-endian f32: magic, matrix count, per-matrix
    /// (rows, cols) headers, then row-major data. Each linear layer
    /// contributes its weight matrix and its bias as an `out x 1` matrix.
    pub fn save(&self, path: &std::path::Path) -> Result<(), GraphError> {
        let mut bytes: Vec<u8> = Vec::new();
        bytes.extend_from_slice(b"IGW1");
        let mats = self.matrices();
        bytes.extend_from_slice(&(2 * mats.len() as u32).to_le_bytes());
        for (w, b) in &mats {
            bytes.extend_from_slice(&(w.len() as u32).to_le_bytes());
            bytes.extend_from_slice(&(w[0].len() as u32).to_le_bytes());
            bytes.extend_from_slice(&(b.len() as u32).to_le_bytes());
            bytes.extend_from_slice(&1u32.to_le_bytes());
        }
        for (w, b) in &mats {
            for row in w.iter() {
                for &v in row {
                    bytes.extend_from_slice(&(v as f32).to_le_bytes());
                }
            }
            for &v in b.iter() {
                bytes.extend_from_slice(&(v as f32).to_le_bytes());
            }
        }
        std::fs::write(path, bytes)?;
        Ok(())
    }

    pub fn load(path: &std::path::Path, config: GnnConfig) -> Result<GnnWeights, GraphError> {
        let bytes = std::fs::read(path)?;
        let mut cursor = 0usize;
        let take = |cursor: &mut usize, n: usize| -> Result<&[u8], GraphError> {
            if *cursor + n > bytes.len() {
                return Err(GraphError::WeightFile("unexpected end of file".into()));
            }
            let s = &bytes[*cursor..*cursor + n];
            *cursor += n;
            Ok(s)
        };
        if take(&mut cursor, 4)? != b"IGW1" {
            return Err(GraphError::WeightFile("bad magic".into()));
        }
        let read_u32 = |cursor: &mut usize| -> Result<u32, GraphError> {
            let s = take(cursor, 4)?;
            Ok(u32::from_le_bytes([s[0], s[1], s[2], s[3]]))
        };
        let count = read_u32(&mut cursor)? as usize;
        let mut dims = Vec::with_capacity(count);
        for _ in 0..count {
            let rows = read_u32(&mut cursor)? as usize;
            let cols = read_u32(&mut cursor)? as usize;
            dims.push((rows, cols));
        }
        let mut matrices: Vec<Vec<Vec<f64>>> = Vec::with_capacity(count);
        for &(rows, cols) in &dims {
            let mut m = Vec::with_capacity(rows);
            for _ in 0..rows {
                let mut row = Vec::with_capacity(cols);
                for _ in 0..cols {
                    let s = take(&mut cursor, 4)?;
                    row.push(f32::from_le_bytes([s[0], s[1], s[2], s[3]]) as f64);
                }
                m.push(row);
            }
            matrices.push(m);
        }
        if cursor != bytes.len() {
            return Err(GraphError::WeightFile("trailing bytes".into()));
        }

        let template = GnnWeights::seeded(config, 0);
        let expected: Vec<(usize, usize)> = template
            .matrices()
            .iter()
            .flat_map(|(w, b)| [(w.len(), w[0].len()), (b.len(), 1)])
            .collect();
        if dims != expected {
            return Err(GraphError::WeightFile(format!(
                "layer shapes {dims:?} do not match the configured network {expected:?}"
            )));
        }
        let mut it = matrices.into_iter();
        let mut build_mlp = |n_layers: usize| -> Mlp {
            let layers = (0..n_layers)
                .map(|_| {
                    let weight = it.next().expect("validated count");
                    let bias_m = it.next().expect("validated count");
                    Linear {
                        weight,
                        bias: bias_m.into_iter().map(|r| r[0]).collect(),
                    }
                })
                .collect();
            Mlp {
                layers,
                activation: config.activation,
            }
        };
        Ok(GnnWeights {
            layer1: build_mlp(3),
            layer2: build_mlp(3),
            readout: build_mlp(3),
            config,
        })
    }
}

/// One EdgeConv pass over an arbitrary directed graph: per-edge messages
/// `mlp([h_dst, h_src, f_e])`, aggregated per node by element-wise max over
/// incoming messages. Nodes without incoming edges yield zeros.
pub fn edge_conv_generic(
    nodes: &[Vec<f64>],
    edges: &[DirectedEdge],
    mlp: &Mlp,
) -> Result<Vec<Vec<f64>>, GraphError> {
    let node_dim = nodes.first().map_or(0, Vec::len);
    let expected = 2 * node_dim + EDGE_FEATURE_DIM;
    if mlp.input_dim() != expected {
        return Err(GraphError::DimensionMismatch(format!(
            "edge perceptron expects input {}, graph provides {expected}",
            mlp.input_dim()
        )));
    }
    let out_dim = mlp.output_dim();
    let mut updated: Vec<Option<Vec<f64>>> = vec![None; nodes.len()];
    let mut input = vec![0.0; expected];
    for e in edges {
        input[..node_dim].copy_from_slice(&nodes[e.dst]);
        input[node_dim..2 * node_dim].copy_from_slice(&nodes[e.src]);
        input[2 * node_dim..].copy_from_slice(&e.feature);
        let message = mlp.forward(&input)?;
        match &mut updated[e.dst] {
            Some(agg) => {
                for (a, m) in agg.iter_mut().zip(&message) {
                    if *m > *a {
                        *a = *m;
                    }
                }
            }
            slot => *slot = Some(message),
        }
    }
    Ok(updated
        .into_iter()
        .map(|v| v.unwrap_or_else(|| vec![0.0; out_dim]))
        .collect())
}

/// EdgeConv over the interaction graph's node features.
pub fn edge_conv(graph: &InteractionGraph, mlp: &Mlp) -> Result<Vec<Vec<f64>>, GraphError> {
    edge_conv_generic(&graph.nodes, &graph.directed_edges, mlp)
}

/// Full forward pass over arbitrary node/edge arrays (used for the
/// relabeling-invariance checks); edge features are reused in both layers.
pub fn embed_generic(
    nodes: &[Vec<f64>],
    edges: &[DirectedEdge],
    weights: &GnnWeights,
) -> Result<Vec<f64>, GraphError> {
    let h1 = edge_conv_generic(nodes, edges, &weights.layer1)?;
    let h2 = edge_conv_generic(&h1, edges, &weights.layer2)?;
    let dim = weights.layer2.output_dim();
    let mut pooled = vec![0.0; dim];
    for h in &h2 {
        for (p, v) in pooled.iter_mut().zip(h) {
            *p += v;
        }
    }
    for p in &mut pooled {
        *p /= nodes.len() as f64;
    }
    weights.readout.forward(&pooled)
}

/// Graph-level feature: two EdgeConv layers, mean pooling over the nine
/// nodes, readout to the 128-dim embedding.
pub fn graph_embed(graph: &InteractionGraph, weights: &GnnWeights) -> Result<Vec<f64>, GraphError> {
    embed_generic(&graph.nodes, &graph.directed_edges, weights)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn sample_input(seed: u64) -> GraphInput {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut pose = |rng: &mut ChaCha8Rng, reach: f64| -> Pose3 {
            Pose3 {
                position: [
                    rng.gen_range(-reach..reach),
                    rng.gen_range(-reach..reach),
                    rng.gen_range(0.0..reach),
                ],
                orientation: Quat::from_yaw(rng.gen_range(-3.0..3.0)),
            }
        };
        GraphInput {
            base: BaseState {
                planar_orientation: [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)],
                angular_velocity: [
                    rng.gen_range(-0.5..0.5),
                    rng.gen_range(-0.5..0.5),
                    rng.gen_range(-0.5..0.5),
                ],
            },
            joints: (0..6)
                .map(|_| JointState {
                    rel_pose: pose(&mut rng, 0.8),
                    angle: rng.gen_range(-2.0..2.0),
                    default_angle: rng.gen_range(-1.0..1.0),
                    velocity: rng.gen_range(-1.0..1.0),
                })
                .collect(),
            end_effector: EndEffectorState {
                rel_pose: pose(&mut rng, 1.0),
                contact: true,
            },
            object: ObjectNodeState {
                rel_pose: pose(&mut rng, 1.5),
                velocity_command: [
                    rng.gen_range(-0.5..0.5),
                    rng.gen_range(-0.5..0.5),
                    rng.gen_range(-0.5..0.5),
                ],
            },
        }
    }

    #[test]
    fn shapes_are_fixed() {
        let g = build_graph(&sample_input(1)).unwrap();
        assert_eq!(g.nodes.len(), NODE_COUNT);
        assert!(g.nodes.iter().all(|n| n.len() == NODE_FEATURE_DIM));
        assert_eq!(g.directed_edges.len(), DIRECTED_EDGE_COUNT);
        assert_eq!(g.node_types.len(), NODE_COUNT);
    }

    #[test]
    fn n4_incoming_neighbors() {
        let g = build_graph(&sample_input(2)).unwrap();
        assert_eq!(g.incoming_neighbors(4), vec![0, 3, 5]);
    }

    #[test]
    fn default_joint_angle_zeroes_derived_feature() {
        let mut input = sample_input(3);
        input.joints[2].angle = 0.7;
        input.joints[2].default_angle = 0.7;
        let g = build_graph(&input).unwrap();
        // joint node 3, raw slot 9 = angle - default
        assert_eq!(g.nodes[3][9], 0.0);
    }

    #[test]
    fn wrong_joint_count_is_malformed() {
        let mut input = sample_input(4);
        input.joints.pop();
        assert!(matches!(
            build_graph(&input),
            Err(GraphError::MalformedState(_))
        ));
    }

    #[test]
    fn non_unit_quaternion_is_malformed() {
        let mut input = sample_input(5);
        input.object.rel_pose.orientation.w *= 1.5;
        assert!(matches!(
            build_graph(&input),
            Err(GraphError::MalformedState(_))
        ));
    }

    #[test]
    fn edge_features_are_antisymmetric() {
        let g = build_graph(&sample_input(6)).unwrap();
        for e in &g.directed_edges {
            let back = g
                .directed_edges
                .iter()
                .find(|b| b.src == e.dst && b.dst == e.src)
                .expect("bidirectional pair");
            for k in 0..3 {
                assert!((e.feature[k] + back.feature[k]).abs() < 1e-12);
            }
            let q = Quat {
                w: e.feature[3],
                x: e.feature[4],
                y: e.feature[5],
                z: e.feature[6],
            };
            let qb = Quat {
                w: back.feature[3],
                x: back.feature[4],
                y: back.feature[5],
                z: back.feature[6],
            };
            let prod = q.mul(&qb);
            assert!((prod.w - 1.0).abs() < 1e-9, "relative rotations must invert");
            assert!(prod.x.abs() < 1e-9 && prod.y.abs() < 1e-9 && prod.z.abs() < 1e-9);
        }
    }

    #[test]
    fn zero_weights_give_zero_messages() {
        let g = build_graph(&sample_input(7)).unwrap();
        let mlp = Mlp {
            layers: vec![
                Linear::zeros(2 * NODE_FEATURE_DIM + EDGE_FEATURE_DIM, 8),
                Linear::zeros(8, 8),
                Linear::zeros(8, 4),
            ],
            activation: Activation::Elu,
        };
        let out = edge_conv(&g, &mlp).unwrap();
        assert!(out.iter().flatten().all(|&v| v == 0.0));
    }

    #[test]
    fn single_incoming_neighbor_passes_message_through() {
        // two nodes, one edge 0 -> 1 with 1-dim features
        let nodes = vec![vec![2.0], vec![3.0]];
        let edges = vec![DirectedEdge {
            src: 0,
            dst: 1,
            feature: [1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        }];
        // single layer: message = h_dst + 2*h_src + sum(f_e)
        let mut l1 = Linear::zeros(9, 1);
        l1.weight[0] = vec![1.0, 2.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0];
        let mlp = Mlp {
            layers: vec![l1],
            activation: Activation::Elu,
        };
        let out = edge_conv_generic(&nodes, &edges, &mlp).unwrap();
        // node 0 has no incoming edges -> zeros
        assert_eq!(out[0], vec![0.0]);
        // node 1: 3 + 2*2 + 1 = 8
        assert_eq!(out[1], vec![8.0]);
    }

    #[test]
    fn embedding_dimension_is_128() {
        let g = build_graph(&sample_input(8)).unwrap();
        let w = GnnWeights::seeded(GnnConfig::default(), 99);
        let l = graph_embed(&g, &w).unwrap();
        assert_eq!(l.len(), EMBED_DIM);
        assert!(l.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn embedding_is_deterministic_per_seed() {
        let g = build_graph(&sample_input(9)).unwrap();
        let a = graph_embed(&g, &GnnWeights::seeded(GnnConfig::default(), 5)).unwrap();
        let b = graph_embed(&g, &GnnWeights::seeded(GnnConfig::default(), 5)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn relabeling_invariance() {
        let g = build_graph(&sample_input(10)).unwrap();
        let w = GnnWeights::seeded(GnnConfig::default(), 123);
        let base = graph_embed(&g, &w).unwrap();
        // reverse the node order and remap edge endpoints consistently
        let perm: Vec<usize> = (0..NODE_COUNT).rev().collect();
        let mut inv = vec![0usize; NODE_COUNT];
        for (new_idx, &old_idx) in perm.iter().enumerate() {
            inv[old_idx] = new_idx;
        }
        let nodes: Vec<Vec<f64>> = perm.iter().map(|&i| g.nodes[i].clone()).collect();
        let edges: Vec<DirectedEdge> = g
            .directed_edges
            .iter()
            .map(|e| DirectedEdge {
                src: inv[e.src],
                dst: inv[e.dst],
                feature: e.feature,
            })
            .collect();
        let permuted = embed_generic(&nodes, &edges, &w).unwrap();
        for (a, b) in base.iter().zip(&permuted) {
            assert!((a - b).abs() <= 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn weight_file_round_trip_is_exact() {
        let dir = std::env::temp_dir().join("rearrange_igw_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("weights.igw");
        let w = GnnWeights::seeded(GnnConfig::default(), 2024);
        w.save(&path).unwrap();
        let loaded = GnnWeights::load(&path, GnnConfig::default()).unwrap();
        assert_eq!(w, loaded);
        std::fs::remove_file(&path).ok();
    }

    #[test]
    fn max_aggregation_dominates_each_message() {
        let g = build_graph(&sample_input(11)).unwrap();
        let w = GnnWeights::seeded(GnnConfig::default(), 321);
        let h1 = edge_conv(&g, &w.layer1).unwrap();
        for e in &g.directed_edges {
            let mut input = Vec::new();
            input.extend_from_slice(&g.nodes[e.dst]);
            input.extend_from_slice(&g.nodes[e.src]);
            input.extend_from_slice(&e.feature);
            let msg = w.layer1.forward(&input).unwrap();
            for (k, &m) in msg.iter().enumerate() {
                assert!(h1[e.dst][k] >= m - 1e-12);
            }
        }
    }
}
