//! Pose to gain conversion.
//!
//! Two independent stages: a 4-way constant-power pan across the capture
//! directions driven by yaw, and inverse-distance weights across the active
//! grid positions driven by the listener's planar position. Node activation
//! is latched with a pair of weight thresholds so a listener hovering near a
//! cell boundary does not toggle convolvers on and off.

use std::collections::BTreeSet;
use std::f64::consts::FRAC_PI_2;

use crate::sir_model::{wrap_degrees, Direction, GainMatrix, GridSpec, Pose};
use crate::{Error, Result};

/// Distance below which a listener counts as standing on a node.
pub const AT_NODE_EPSILON_M: f64 = 1e-6;

/// Per-direction gains for one yaw. Squares sum to one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PanGains(pub [f64; 4]);

impl PanGains {
    pub fn get(&self, d: Direction) -> f64 {
        self.0[d.index()]
    }
}

/// Constant-power pan between the two capture directions adjacent to `yaw_deg`.
pub fn directional_gains(yaw_deg: f64) -> PanGains {
    let yaw = wrap_degrees(yaw_deg);
    let sector = ((yaw / 90.0).floor() as usize).min(3);
    let t = (yaw - sector as f64 * 90.0) / 90.0;
    let mut g = [0.0; 4];
    let theta = t * FRAC_PI_2;
    g[sector] = theta.cos();
    if t > 0.0 {
        g[(sector + 1) % 4] = theta.sin();
    }
    PanGains(g)
}

/// Normalized inverse-distance weights, one per contributing node.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct IdwWeights {
    pub weights: Vec<(usize, f64)>,
}

impl IdwWeights {
    /// Number of contributing nodes.
    pub fn m(&self) -> usize {
        self.weights.len()
    }

    pub fn get(&self, p: usize) -> f64 {
        self.weights
            .iter()
            .find(|(q, _)| *q == p)
            .map_or(0.0, |&(_, w)| w)
    }

    pub fn sum(&self) -> f64 {
        self.weights.iter().map(|(_, w)| w).sum()
    }
}

/// Inverse-distance weights of `nodes` as seen from `(x, z)`.
///
/// A listener within [`AT_NODE_EPSILON_M`] of a node gives that node (the
/// nearest one, if several qualify) weight one.
pub fn idw_weights_at(x: f64, z: f64, grid: &GridSpec, nodes: &[usize]) -> Result<IdwWeights> {
    if nodes.is_empty() {
        return Err(Error::EmptyNodeSet);
    }
    let mut dists = Vec::with_capacity(nodes.len());
    for &p in nodes {
        let (nx, nz) = grid.position_coords(p)?;
        dists.push((p, (x - nx).hypot(z - nz)));
    }
    let nearest = dists
        .iter()
        .enumerate()
        .min_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
        .map(|(i, _)| i)
        .expect("non-empty");
    if dists[nearest].1 < AT_NODE_EPSILON_M {
        return Ok(IdwWeights {
            weights: dists
                .iter()
                .enumerate()
                .map(|(i, &(p, _))| (p, if i == nearest { 1.0 } else { 0.0 }))
                .collect(),
        });
    }
    let total: f64 = dists.iter().map(|(_, d)| 1.0 / d).sum();
    Ok(IdwWeights {
        weights: dists.iter().map(|&(p, d)| (p, (1.0 / d) / total)).collect(),
    })
}

/// [`idw_weights_at`] for a pose, after clamping it into the grid.
pub fn idw_weights(pose: &Pose, grid: &GridSpec, nodes: &[usize]) -> Result<IdwWeights> {
    let (x, z) = grid.clamp(pose.x_m, pose.z_m);
    idw_weights_at(x, z, grid, nodes)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActivationConfig {
    /// Candidate nodes per update; 4 means the corners of the enclosing cell.
    pub max_active: usize,
    pub w_on: f64,
    pub w_off: f64,
}

impl Default for ActivationConfig {
    fn default() -> Self {
        Self {
            max_active: 4,
            w_on: 0.02,
            w_off: 0.01,
        }
    }
}

impl ActivationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_active == 0 {
            return Err(Error::InvalidConfig("max_active must be at least 1".into()));
        }
        if !(0.0 <= self.w_off && self.w_off < self.w_on && self.w_on <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "hysteresis needs 0 <= w_off < w_on <= 1 (got {} / {})",
                self.w_off, self.w_on
            )));
        }
        Ok(())
    }
}

/// Latched set of active grid positions.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ActivationState {
    active: BTreeSet<usize>,
}

impl ActivationState {
    pub fn from_active(active: impl IntoIterator<Item = usize>) -> Self {
        Self {
            active: active.into_iter().collect(),
        }
    }

    pub fn active(&self) -> &BTreeSet<usize> {
        &self.active
    }

    pub fn is_active(&self, p: usize) -> bool {
        self.active.contains(&p)
    }

    pub fn to_vec(&self) -> Vec<usize> {
        self.active.iter().copied().collect()
    }
}

/// Candidate nodes for a (clamped) position: the enclosing cell's corners
/// ordered by distance, trimmed or extended with the nearest other nodes to
/// `max_active`.
pub fn candidate_nodes(x: f64, z: f64, grid: &GridSpec, max_active: usize) -> Vec<usize> {
    let dist = |p: usize| {
        let (nx, nz) = grid.position_coords(p).expect("index from grid");
        (x - nx).hypot(z - nz)
    };
    let by_distance = |a: &usize, b: &usize| dist(*a).total_cmp(&dist(*b)).then(a.cmp(b));
    let mut corners = grid.enclosing_cell(x, z);
    corners.sort_by(by_distance);
    if max_active <= corners.len() {
        corners.truncate(max_active);
        return corners;
    }
    let mut rest: Vec<usize> = (0..grid.position_count())
        .filter(|p| !corners.contains(p))
        .collect();
    rest.sort_by(by_distance);
    corners.extend(rest.into_iter().take(max_active - corners.len()));
    corners
}

/// Advances the activation latch for a new pose.
///
/// Inactive candidates switch on once their weight over the candidate set
/// exceeds `w_on`; active nodes switch off once their weight drops below
/// `w_off`. A previously active node that is no longer a candidate is
/// weighed against the candidates plus itself, and is only kept while it
/// lies on the ring of nodes around the enclosing cell. Plain 1/d weights
/// decay too slowly to ever reach `w_off` on a stage-sized grid.
pub fn select_active_nodes(
    pose: &Pose,
    grid: &GridSpec,
    prev: &ActivationState,
    cfg: &ActivationConfig,
) -> ActivationState {
    let (x, z) = grid.clamp(pose.x_m, pose.z_m);
    let candidates = candidate_nodes(x, z, grid, cfg.max_active);
    let weights = idw_weights_at(x, z, grid, &candidates).expect("candidate set is never empty");

    let mut active = BTreeSet::new();
    for &(p, w) in &weights.weights {
        let on = if prev.is_active(p) {
            w >= cfg.w_off
        } else {
            w > cfg.w_on
        };
        if on {
            active.insert(p);
        }
    }
    let ring = lingering_ring(x, z, grid);
    for &p in prev
        .active
        .iter()
        .filter(|p| !candidates.contains(p) && ring(**p))
    {
        let mut nodes = candidates.clone();
        nodes.push(p);
        let w = idw_weights_at(x, z, grid, &nodes)
            .expect("non-empty")
            .get(p);
        if w >= cfg.w_off {
            active.insert(p);
        }
    }
    if active.is_empty() {
        // Only reachable with very large candidate sets: keep the strongest node.
        let best = weights
            .weights
            .iter()
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .expect("non-empty");
        active.insert(best.0);
    }
    ActivationState { active }
}

fn lingering_ring(x: f64, z: f64, grid: &GridSpec) -> impl Fn(usize) -> bool {
    let cell = grid.enclosing_cell(x, z);
    let (r0, c0) = grid.row_col(cell[0]).expect("index from grid");
    let cols = grid.cols;
    move |p| {
        let (r, c) = (p / cols, p % cols);
        r + 1 >= r0 && r <= r0 + 2 && c + 1 >= c0 && c <= c0 + 2
    }
}

/// Product of IDW weights over the active nodes and the yaw pan gains.
pub fn gain_matrix(pose: &Pose, grid: &GridSpec, state: &ActivationState) -> Result<GainMatrix> {
    let nodes = state.to_vec();
    let weights = idw_weights(pose, grid, &nodes)?;
    let pan = directional_gains(pose.yaw_deg());
    GainMatrix::from_stages(grid.position_count(), &weights.weights, pan.0)
}

/// Owns the activation latch for a stream of poses.
#[derive(Debug, Clone)]
pub struct Interpolator {
    grid: GridSpec,
    cfg: ActivationConfig,
    state: ActivationState,
    pose: Pose,
}

impl Interpolator {
    /// Starts at the default pose (grid origin, yaw 0).
    pub fn new(grid: GridSpec, cfg: ActivationConfig) -> Result<Self> {
        grid.validate()?;
        cfg.validate()?;
        let pose = Pose::new(grid.origin_x, grid.origin_z, 0.0);
        let state = select_active_nodes(&pose, &grid, &ActivationState::default(), &cfg);
        Ok(Self {
            grid,
            cfg,
            state,
            pose,
        })
    }

    pub fn update(&mut self, pose: Pose) -> GainMatrix {
        self.pose = pose;
        self.state = select_active_nodes(&pose, &self.grid, &self.state, &self.cfg);
        self.current()
    }

    pub fn current(&self) -> GainMatrix {
        gain_matrix(&self.pose, &self.grid, &self.state).expect("active set is never empty")
    }

    pub fn pose(&self) -> Pose {
        self.pose
    }

    pub fn state(&self) -> &ActivationState {
        &self.state
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn assert_gains(yaw: f64, want: [f64; 4]) {
        let g = directional_gains(yaw).0;
        for i in 0..4 {
            assert!((g[i] - want[i]).abs() < 1e-6, "yaw {yaw}: {g:?} vs {want:?}");
        }
    }

    #[test]
    #[allow(clippy::approx_constant)]
    fn pan_examples() {
        assert_eq!(directional_gains(0.0).0, [1.0, 0.0, 0.0, 0.0]);
        assert_gains(45.0, [0.707107, 0.707107, 0.0, 0.0]);
        assert_gains(30.0, [0.866025, 0.5, 0.0, 0.0]);
        assert_eq!(directional_gains(270.0).0, [0.0, 0.0, 0.0, 1.0]);
        assert_eq!(directional_gains(90.0).0, [0.0, 1.0, 0.0, 0.0]);
        assert_eq!(directional_gains(-90.0).0, [0.0, 0.0, 0.0, 1.0]);
        assert_gains(315.0, [0.707107, 0.0, 0.0, 0.707107]);
    }

    #[test]
    fn idw_unit_cell_example() {
        let g = GridSpec::default();
        let w = idw_weights(&Pose::new(0.25, 0.0, 0.0), &g, &[0, 1, 5, 6]).unwrap();
        let want = [0.563105, 0.187702, 0.136573, 0.112621];
        for (p, expected) in [0, 1, 5, 6].into_iter().zip(want) {
            assert!((w.get(p) - expected).abs() < 1e-6);
        }
        assert_eq!(w.m(), 4);
    }

    #[test]
    fn idw_at_node_and_center() {
        let g = GridSpec::default();
        let w = idw_weights(&Pose::new(1.0, 1.0, 0.0), &g, &[0, 1, 5, 6]).unwrap();
        assert_eq!(w.get(6), 1.0);
        assert_eq!(w.get(0) + w.get(1) + w.get(5), 0.0);
        let c = idw_weights(&Pose::new(0.5, 0.5, 0.0), &g, &[0, 1, 5, 6]).unwrap();
        for p in [0, 1, 5, 6] {
            assert!((c.get(p) - 0.25).abs() < 1e-12);
        }
        assert!(matches!(
            idw_weights(&Pose::default(), &g, &[]),
            Err(Error::EmptyNodeSet)
        ));
    }

    #[test]
    fn activation_inside_cell_and_at_corner() {
        let g = GridSpec::default();
        let cfg = ActivationConfig::default();
        let s = select_active_nodes(&Pose::new(0.4, 0.6, 0.0), &g, &Default::default(), &cfg);
        assert_eq!(s.to_vec(), vec![0, 1, 5, 6]);
        let s = select_active_nodes(&Pose::new(4.0, 3.0, 0.0), &g, &Default::default(), &cfg);
        assert!(s.is_active(19));
        let gm = gain_matrix(&Pose::new(4.0, 3.0, 0.0), &g, &s).unwrap();
        assert_eq!(gm.get(19, Direction::Front), 1.0);
    }

    #[test]
    fn activation_latches_across_boundary_dither() {
        let g = GridSpec::default();
        let cfg = ActivationConfig::default();
        let mut state =
            select_active_nodes(&Pose::new(0.999, 1.5, 0.0), &g, &Default::default(), &cfg);
        let mut changes = 0;
        for i in 0..1000 {
            let x = if i % 2 == 0 { 1.001 } else { 0.999 };
            let next = select_active_nodes(&Pose::new(x, 1.5, 0.0), &g, &state, &cfg);
            if next != state {
                changes += 1;
            }
            state = next;
        }
        assert!(changes <= 1, "{changes} changes");
    }

    #[test]
    fn stale_node_lingers_until_below_w_off() {
        let g = GridSpec::default();
        let cfg = ActivationConfig::default();
        let prev = ActivationState::from_active([0, 1, 5, 6]);
        // just across x = 1 into the next cell, nodes 0 and 5 are no longer candidates
        let s = select_active_nodes(&Pose::new(1.05, 0.5, 0.0), &g, &prev, &cfg);
        assert!(s.is_active(0), "node 0 should linger: {:?}", s.to_vec());
        let next = select_active_nodes(&Pose::new(1.9, 0.5, 0.0), &g, &s, &cfg);
        assert!(next.is_active(0));
        let far = select_active_nodes(&Pose::new(2.5, 0.5, 0.0), &g, &next, &cfg);
        assert!(!far.is_active(0));
        assert_eq!(far.to_vec(), vec![1, 2, 3, 6, 7, 8]);
    }

    #[test]
    fn candidates_extend_beyond_the_cell() {
        let g = GridSpec::default();
        assert_eq!(candidate_nodes(0.1, 0.1, &g, 1), vec![0]);
        let c = candidate_nodes(0.5, 0.5, &g, 6);
        assert_eq!(c.len(), 6);
        assert_eq!(&c[..4].iter().copied().collect::<BTreeSet<_>>(), &BTreeSet::from([0, 1, 5, 6]));
        assert_eq!(candidate_nodes(0.5, 0.5, &g, 100).len(), 20);
    }

    #[test]
    fn cell_center_yaw_45_matrix() {
        let g = GridSpec::default();
        let pose = Pose::new(0.5, 0.5, 45.0);
        let s = select_active_nodes(&pose, &g, &Default::default(), &Default::default());
        let gm = gain_matrix(&pose, &g, &s).unwrap();
        let nz: Vec<_> = gm.nonzero().collect();
        assert_eq!(nz.len(), 8);
        for (_, _, v) in nz {
            assert!((v - 0.176777).abs() < 1e-6);
        }
    }

    #[test]
    fn interpolator_starts_at_origin() {
        let it = Interpolator::new(GridSpec::default(), Default::default()).unwrap();
        let gm = it.current();
        assert_eq!(gm.get(0, Direction::Front), 1.0);
        assert_eq!(gm.nonzero().count(), 1);
        let bad = ActivationConfig {
            w_on: 0.01,
            w_off: 0.02,
            ..Default::default()
        };
        assert!(Interpolator::new(GridSpec::default(), bad).is_err());
    }

    proptest! {
        #[test]
        fn pan_is_power_preserving(yaw in -1000.0f64..1000.0) {
            let g = directional_gains(yaw).0;
            prop_assert!((g.iter().map(|v| v * v).sum::<f64>() - 1.0).abs() < 1e-9);
            prop_assert!(g.iter().filter(|v| **v != 0.0).count() <= 2);
        }

        #[test]
        fn idw_is_normalized_and_scale_invariant(
            x in 0.0f64..4.0, z in 0.0f64..3.0, k in 0.1f64..10.0,
        ) {
            let g = GridSpec::default();
            let nodes = g.enclosing_cell(x, z);
            let w = idw_weights_at(x, z, &g, &nodes).unwrap();
            prop_assert!((w.sum() - 1.0).abs() < 1e-9);
            // same layout scaled by k
            let gk = GridSpec::new(4, 5, k).unwrap();
            let wk = idw_weights_at(x * k, z * k, &gk, &nodes).unwrap();
            for (a, b) in w.weights.iter().zip(&wk.weights) {
                prop_assert!((a.1 - b.1).abs() < 1e-9);
            }
            let mut reversed = nodes.clone();
            reversed.reverse();
            let wr = idw_weights_at(x, z, &g, &reversed).unwrap();
            for &p in &nodes {
                prop_assert!((w.get(p) - wr.get(p)).abs() < 1e-12);
            }
        }

        #[test]
        fn matrix_stages_are_normalized(x in -1.0f64..5.0, z in -1.0f64..4.0, yaw in 0.0f64..360.0) {
            let g = GridSpec::default();
            let pose = Pose::new(x, z, yaw);
            let s = select_active_nodes(&pose, &g, &Default::default(), &Default::default());
            let gm = gain_matrix(&pose, &g, &s).unwrap();
            let weight_sum: f64 = (0..20).map(|p| gm.position_weight(p)).sum();
            prop_assert!((weight_sum - 1.0).abs() < 1e-9);
            prop_assert!(gm.total_power() <= 1.0 + 1e-12);
            for p in 0..20 {
                if !s.is_active(p) {
                    prop_assert_eq!(gm.row(p), [0.0; 4]);
                }
            }
        }
    }
}
