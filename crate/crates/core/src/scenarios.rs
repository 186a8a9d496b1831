//! Case-study plants: a linearized power network and a reduced water network,
//! both Euler-discretized descriptor systems, plus their closed-loop run
//! configurations and a TOML config format.
//!
//! Default physical parameters are illustrative, not taken from any dataset.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::analysis;
use crate::deepc::{ClosedLoopLog, DeePCConfig, Phase, Schedule};
use crate::error::{Error, Result};
use crate::linalg;
use crate::qp::QpSettings;
use crate::system::{DescriptorSystem, QuasiWeierstrass};
use crate::Scalar;

/// Band for the settling summary.
pub const SETTLE_BAND: f64 = 0.05;
/// Steps allowed between a phase start and settling.
pub const SETTLE_STEPS: usize = 50;

/// A built plant with its physical initial state and output selection.
#[derive(Debug, Clone)]
pub struct Scenario<T: Scalar> {
    pub name: String,
    pub system: DescriptorSystem<T>,
    pub qw: QuasiWeierstrass<T>,
    /// Consistent physical initial state at zero input.
    pub x0: DVector<T>,
    /// State index read by each output.
    pub outputs: Vec<usize>,
    pub output_labels: Vec<String>,
    /// Outputs the controller is expected to steer.
    pub controllable_outputs: Vec<usize>,
    z1_0: DVector<T>,
}

impl<T: Scalar> Scenario<T> {
    /// `dynamic` lists the state indices carried by `E`; their initial values
    /// fix the slow coordinates and the algebraic states follow.
    fn new(
        name: &str,
        system: DescriptorSystem<T>,
        outputs: Vec<usize>,
        output_labels: Vec<String>,
        controllable_outputs: Vec<usize>,
        dynamic: &[usize],
        x_dyn: &DVector<T>,
    ) -> Result<Self> {
        let qw = system.quasi_weierstrass()?;
        if qw.q() != dynamic.len() {
            return Err(Error::Config(format!(
                "{name}: {} slow states but {} dynamic components",
                qw.q(),
                dynamic.len()
            )));
        }
        let p1 = qw.p_mat().columns(0, qw.q()).into_owned();
        let rows = DMatrix::from_fn(dynamic.len(), qw.q(), |i, j| p1[(dynamic[i], j)]);
        let z1_0 = rows.lu().solve(x_dyn).ok_or_else(|| {
            Error::Singular(format!("{name}: dynamic states do not fix the slow state"))
        })?;
        let x0 = &p1 * &z1_0;
        Ok(Scenario {
            name: name.into(),
            system,
            qw,
            x0,
            outputs,
            output_labels,
            controllable_outputs,
            z1_0,
        })
    }

    /// Slow-coordinate initial state for [`crate::deepc::run_closed_loop`].
    pub fn z1_0(&self) -> &DVector<T> {
        &self.z1_0
    }

    fn check_structure(&self) -> Result<()> {
        if !analysis::oracle_r_observable(&self.qw) {
            return Err(Error::Config(format!(
                "{}: outputs do not make the plant R-observable",
                self.name
            )));
        }
        Ok(())
    }
}

// false for NaN as well
fn positive(v: f64) -> bool {
    v > 0.0
}

fn selector<T: Scalar>(n: usize, idx: &[usize]) -> DMatrix<T> {
    DMatrix::from_fn(
        idx.len(),
        n,
        |i, j| if idx[i] == j { T::one() } else { T::zero() },
    )
}

fn connected(n: usize, edges: &[(usize, usize)]) -> bool {
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([0]);
    seen[0] = true;
    while let Some(v) = queue.pop_front() {
        for &w in &adj[v] {
            if !seen[w] {
                seen[w] = true;
                queue.push_back(w);
            }
        }
    }
    seen.into_iter().all(|s| s)
}

// ---------------------------------------------------------------- power

#[derive(Debug, Clone, PartialEq)]
pub struct PowerConfig {
    /// Generator count; buses `0..g` carry the generators.
    pub g: usize,
    pub n_bus: usize,
    /// Symmetric line susceptances, zero diagonal.
    pub susceptance: DMatrix<f64>,
    pub inertia: Vec<f64>,
    pub damping: Vec<f64>,
    pub tau: f64,
    /// `g × m` mixing of the inputs into the generator power balance.
    pub b_pattern: DMatrix<f64>,
    /// State indices observed, 0-based in `x = [ω_G; θ_G; θ_rest]`.
    pub outputs: Vec<usize>,
    /// Positions in `outputs` the controller is expected to steer.
    pub controllable: Vec<usize>,
    pub omega0: Vec<f64>,
    pub theta0: Vec<f64>,
}

/// The three-column pattern whose columns sum to zero, so the inputs cannot
/// move the total generated power.
pub fn default_b_pattern() -> DMatrix<f64> {
    DMatrix::from_row_slice(3, 3, &[1.0, 1.0, 0.0, -1.0, 0.0, 1.0, 0.0, -1.0, -1.0])
}

impl Default for PowerConfig {
    /// Nine buses: generators on buses 1 to 3, bus 4 tied only to the three
    /// generators, and buses 5 to 9 forming a chain 1-5-6-7-8-9-3 with bus 2
    /// attached at 7.
    ///
    /// Damping and the bus-4 susceptances are both proportional to inertia.
    /// Then the centre-of-inertia frequency evolves on its own, and the angle
    /// of bus 4 (state x7) depends only on it and on the conserved quantity
    /// `Σ M ω + Σ D θ`, so x7 cannot be steered. The network is weak and the
    /// machines light so that the bounded inputs can move ω1 within a few
    /// seconds.
    fn default() -> Self {
        let inertia = vec![1.0, 0.8, 0.6];
        let ring = 0.02;
        let mut lines = vec![
            (0, 4, ring),
            (4, 5, ring),
            (5, 6, ring),
            (1, 6, ring),
            (6, 7, ring),
            (7, 8, ring),
            (2, 8, ring),
        ];
        lines.extend(inertia.iter().enumerate().map(|(i, m)| (i, 3, 0.01 * m)));
        let mut b = DMatrix::zeros(9, 9);
        for (i, j, v) in lines {
            b[(i, j)] = v;
            b[(j, i)] = v;
        }
        PowerConfig {
            g: 3,
            n_bus: 9,
            susceptance: b,
            damping: inertia.iter().map(|m| 0.01 * m).collect(),
            inertia,
            tau: 0.1,
            b_pattern: default_b_pattern(),
            outputs: vec![0, 6],
            controllable: vec![0],
            omega0: vec![0.0; 3],
            theta0: vec![0.0; 3],
        }
    }
}

impl PowerConfig {
    pub fn validate(&self) -> Result<()> {
        let (g, n) = (self.g, self.n_bus);
        let bad = |msg: String| Err(Error::Config(msg));
        if g == 0 || g > n {
            return bad(format!("need 0 < g ≤ n_bus, got g = {g}, n_bus = {n}"));
        }
        if self.susceptance.shape() != (n, n) {
            return bad(format!("susceptance must be {n}x{n}"));
        }
        let b = &self.susceptance;
        for i in 0..n {
            if b[(i, i)] != 0.0 {
                return bad(format!(
                    "susceptance has a nonzero diagonal at bus {}",
                    i + 1
                ));
            }
            for j in 0..n {
                if b[(i, j)] != b[(j, i)] || b[(i, j)] < 0.0 || !b[(i, j)].is_finite() {
                    return bad(format!(
                        "susceptance entry ({}, {}) is not symmetric and nonnegative",
                        i + 1,
                        j + 1
                    ));
                }
            }
        }
        if self.inertia.len() != g || self.damping.len() != g {
            return bad(format!("need {g} inertias and {g} damping values"));
        }
        if self
            .inertia
            .iter()
            .chain(&self.damping)
            .any(|&v| !positive(v))
        {
            return bad("inertia and damping must be positive".into());
        }
        if !positive(self.tau) {
            return bad("tau must be positive".into());
        }
        if self.b_pattern.nrows() != g || self.b_pattern.ncols() == 0 {
            return bad(format!("b_pattern must have {g} rows"));
        }
        if self.outputs.is_empty() || self.outputs.iter().any(|&i| i >= n + g) {
            return bad(format!("outputs must index states 0..{}", n + g));
        }
        if self.controllable.iter().any(|&i| i >= self.outputs.len()) {
            return bad("controllable lists an output that does not exist".into());
        }
        if self.omega0.len() != g || self.theta0.len() != g {
            return bad(format!("omega0 and theta0 need {g} entries"));
        }
        let edges: Vec<_> = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .filter(|&(i, j)| b[(i, j)] > 0.0)
            .collect();
        if !connected(n, &edges) {
            return Err(Error::DisconnectedNetwork);
        }
        Ok(())
    }

    /// `diag(row sums) − B̄`.
    pub fn laplacian(&self) -> DMatrix<f64> {
        let b = &self.susceptance;
        let mut l = -b.clone();
        for i in 0..self.n_bus {
            l[(i, i)] += b.row(i).sum();
        }
        l
    }
}

/// Swing dynamics with constant-power loads, linearized and Euler-discretized:
/// `E = [0 I 0; M̃ 0 0; 0 0 0]`, `A = E − τ [−I 0 0; D̃ L_G; 0 L_rest]`,
/// `B = τ [0; b_pattern; 0]`, with state `[ω_G; θ_G; θ_rest]`.
pub fn build_power<T: Scalar>(cfg: &PowerConfig) -> Result<Scenario<T>> {
    cfg.validate()?;
    let (g, n) = (cfg.g, cfg.n_bus);
    let dim = n + g;
    let lap = cfg.laplacian();
    let mut e = DMatrix::<f64>::zeros(dim, dim);
    let mut k = DMatrix::<f64>::zeros(dim, dim);
    for i in 0..g {
        e[(i, g + i)] = 1.0;
        e[(g + i, i)] = cfg.inertia[i];
        k[(i, i)] = -1.0;
        k[(g + i, i)] = cfg.damping[i];
    }
    k.view_mut((g, g), (n, n)).copy_from(&lap);
    let a = &e - &k * cfg.tau;
    let m = cfg.b_pattern.ncols();
    let mut b = DMatrix::<f64>::zeros(dim, m);
    b.view_mut((g, 0), (g, m))
        .copy_from(&(&cfg.b_pattern * cfg.tau));
    let c = selector::<f64>(dim, &cfg.outputs);
    let d = DMatrix::<f64>::zeros(cfg.outputs.len(), m);
    let conv = |x: &DMatrix<f64>| x.map(T::lit);
    let system = DescriptorSystem::new(conv(&e), conv(&a), conv(&b), conv(&c), conv(&d))?;
    let labels = cfg.outputs.iter().map(|i| format!("x{}", i + 1)).collect();
    let x_dyn = DVector::from_iterator(
        2 * g,
        cfg.omega0.iter().chain(&cfg.theta0).map(|&v| T::lit(v)),
    );
    let dynamic: Vec<usize> = (0..2 * g).collect();
    let sc = Scenario::new(
        "power",
        system,
        cfg.outputs.clone(),
        labels,
        cfg.controllable.clone(),
        &dynamic,
        &x_dyn,
    )?;
    sc.check_structure()?;
    Ok(sc)
}

// ---------------------------------------------------------------- water

/// A network node; labels are 1-based (`R1`, `T3`, `J2`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Node {
    Reservoir(usize),
    Tank(usize),
    Junction(usize),
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Reservoir(i) => write!(f, "R{}", i + 1),
            Node::Tank(i) => write!(f, "T{}", i + 1),
            Node::Junction(i) => write!(f, "J{}", i + 1),
        }
    }
}

impl FromStr for Node {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::Config(format!("bad node label {s:?}"));
        let (kind, num) = s.split_at(s.char_indices().nth(1).map_or(s.len(), |(i, _)| i));
        let idx: usize = num.parse().map_err(|_| bad())?;
        if idx == 0 {
            return Err(bad());
        }
        match kind {
            "R" | "r" => Ok(Node::Reservoir(idx - 1)),
            "T" | "t" => Ok(Node::Tank(idx - 1)),
            "J" | "j" => Ok(Node::Junction(idx - 1)),
            _ => Err(bad()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkKind {
    Pipe,
    Pump,
    Valve,
}

impl fmt::Display for LinkKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LinkKind::Pipe => "pipe",
            LinkKind::Pump => "pump",
            LinkKind::Valve => "valve",
        })
    }
}

impl FromStr for LinkKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "pipe" => Ok(LinkKind::Pipe),
            "pump" => Ok(LinkKind::Pump),
            "valve" => Ok(LinkKind::Valve),
            other => Err(Error::Config(format!("unknown link kind {other:?}"))),
        }
    }
}

/// Hydraulic element linearized at the operating point: flow
/// `conductance · (h_from − h_to)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Link {
    pub kind: LinkKind,
    pub from: Node,
    pub to: Node,
    pub conductance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WaterConfig {
    pub reservoirs: usize,
    pub tanks: usize,
    pub junctions: usize,
    pub areas: Vec<f64>,
    pub links: Vec<Link>,
    pub tau: f64,
    /// Junction receiving the inputs, mixed by `input_pattern`.
    pub input_junction: usize,
    pub input_pattern: Vec<f64>,
    pub outputs: Vec<Node>,
    pub controllable: Vec<usize>,
    /// Initial heads of reservoirs and tanks; unlisted ones start at zero.
    pub heads: Vec<(Node, f64)>,
}

impl Default for WaterConfig {
    /// Two reservoirs, three tanks, six junctions. R2 feeds J1, where the
    /// inputs enter; R1 hangs off the far end of the main line.
    fn default() -> Self {
        use Node::{Junction as J, Reservoir as R, Tank as T};
        let pipe = |from, to, conductance| Link {
            kind: LinkKind::Pipe,
            from,
            to,
            conductance,
        };
        WaterConfig {
            reservoirs: 2,
            tanks: 3,
            junctions: 6,
            areas: vec![0.3, 0.3, 0.3],
            links: vec![
                pipe(R(1), J(0), 0.4),
                pipe(J(0), J(1), 12.0),
                pipe(J(1), J(2), 9.0),
                pipe(J(2), J(3), 9.0),
                pipe(J(3), J(4), 6.0),
                pipe(J(1), J(5), 9.0),
                pipe(J(5), J(3), 6.0),
                pipe(J(4), R(0), 0.2),
                pipe(J(2), T(0), 3.0),
                pipe(J(4), T(1), 3.0),
                pipe(J(5), T(2), 6.0),
            ],
            tau: 0.1,
            input_junction: 0,
            input_pattern: vec![1.0, 1.0, 1.0],
            outputs: vec![R(0), T(2)],
            controllable: vec![1],
            heads: vec![(R(0), 0.0), (R(1), 6.0)],
        }
    }
}

/// Node order: fixed reservoirs other than R1, then R1 and the tanks, then the
/// junctions next to a fixed reservoir, then the remaining junctions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WaterLayout {
    pub order: Vec<Node>,
    /// Sizes of the four state groups.
    pub blocks: [usize; 4],
}

impl WaterLayout {
    pub fn index(&self, node: Node) -> Option<usize> {
        self.order.iter().position(|&n| n == node)
    }
}

impl WaterConfig {
    fn node_exists(&self, n: Node) -> bool {
        match n {
            Node::Reservoir(i) => i < self.reservoirs,
            Node::Tank(i) => i < self.tanks,
            Node::Junction(i) => i < self.junctions,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.reservoirs == 0 {
            return bad("need at least one reservoir".into());
        }
        if self.areas.len() != self.tanks || self.areas.iter().any(|&a| !positive(a)) {
            return bad(format!("need {} positive tank areas", self.tanks));
        }
        for l in &self.links {
            if !self.node_exists(l.from) || !self.node_exists(l.to) || l.from == l.to {
                return bad(format!(
                    "link {}-{} names a missing node or a loop",
                    l.from, l.to
                ));
            }
            if !positive(l.conductance) {
                return bad(format!(
                    "link {}-{} needs a positive conductance",
                    l.from, l.to
                ));
            }
        }
        if !positive(self.tau) {
            return bad("tau must be positive".into());
        }
        if self.input_junction >= self.junctions || self.input_pattern.is_empty() {
            return bad("input junction missing or empty input pattern".into());
        }
        if self.outputs.is_empty() || self.outputs.iter().any(|&n| !self.node_exists(n)) {
            return bad("outputs name a missing node".into());
        }
        if self.controllable.iter().any(|&i| i >= self.outputs.len()) {
            return bad("controllable lists an output that does not exist".into());
        }
        for (n, _) in &self.heads {
            if matches!(n, Node::Junction(_)) || !self.node_exists(*n) {
                return bad(format!(
                    "initial head given for {n}, which is not a reservoir or tank"
                ));
            }
        }
        let layout = self.layout();
        let edges: Vec<_> = self
            .links
            .iter()
            .map(|l| (layout.index(l.from).unwrap(), layout.index(l.to).unwrap()))
            .collect();
        if !connected(layout.order.len(), &edges) {
            return Err(Error::DisconnectedNetwork);
        }
        Ok(())
    }

    pub fn layout(&self) -> WaterLayout {
        let fixed: Vec<Node> = (1..self.reservoirs).map(Node::Reservoir).collect();
        let stored: Vec<Node> = std::iter::once(Node::Reservoir(0))
            .chain((0..self.tanks).map(Node::Tank))
            .collect();
        let near_fixed = |j: usize| {
            self.links.iter().any(|l| {
                (l.from == Node::Junction(j) && fixed.contains(&l.to))
                    || (l.to == Node::Junction(j) && fixed.contains(&l.from))
            })
        };
        let (x3, x4): (Vec<usize>, Vec<usize>) = (0..self.junctions).partition(|&j| near_fixed(j));
        let blocks = [fixed.len(), stored.len(), x3.len(), x4.len()];
        let order = fixed
            .into_iter()
            .chain(stored)
            .chain(x3.into_iter().map(Node::Junction))
            .chain(x4.into_iter().map(Node::Junction))
            .collect();
        WaterLayout { order, blocks }
    }
}

/// Reservoirs hold their head, tanks integrate net inflow over their area and
/// junctions balance flow, all linear in the heads:
/// `E = diag(I, diag(1, A_i), 0, 0)` and `A = E − τ L_row` on the non-reservoir
/// rows, with `L` the conductance Laplacian.
pub fn build_water<T: Scalar>(cfg: &WaterConfig) -> Result<Scenario<T>> {
    cfg.validate()?;
    let layout = cfg.layout();
    let n = layout.order.len();
    let mut lap = DMatrix::<f64>::zeros(n, n);
    for l in &cfg.links {
        let (i, j) = (layout.index(l.from).unwrap(), layout.index(l.to).unwrap());
        lap[(i, i)] += l.conductance;
        lap[(j, j)] += l.conductance;
        lap[(i, j)] -= l.conductance;
        lap[(j, i)] -= l.conductance;
    }
    let mut e = DMatrix::<f64>::zeros(n, n);
    let mut a = DMatrix::<f64>::zeros(n, n);
    for (i, node) in layout.order.iter().enumerate() {
        match node {
            Node::Reservoir(_) => {
                e[(i, i)] = 1.0;
                a[(i, i)] = 1.0;
            }
            Node::Tank(t) => {
                e[(i, i)] = cfg.areas[*t];
                a.set_row(i, &(e.row(i) - lap.row(i) * cfg.tau));
            }
            Node::Junction(_) => a.set_row(i, &(-lap.row(i) * cfg.tau)),
        }
    }
    check_water_pattern(&a, &layout)?;
    let m = cfg.input_pattern.len();
    let mut b = DMatrix::<f64>::zeros(n, m);
    let row = layout.index(Node::Junction(cfg.input_junction)).unwrap();
    for (k, &v) in cfg.input_pattern.iter().enumerate() {
        b[(row, k)] = cfg.tau * v;
    }
    let out_idx: Vec<usize> = cfg
        .outputs
        .iter()
        .map(|&o| layout.index(o).unwrap())
        .collect();
    let c = selector::<f64>(n, &out_idx);
    let d = DMatrix::<f64>::zeros(out_idx.len(), m);
    let conv = |x: &DMatrix<f64>| x.map(T::lit);
    let system =
        DescriptorSystem::new(conv(&e), conv(&a), conv(&b), conv(&c), conv(&d)).map_err(|err| {
            match err {
                Error::SingularPencil => Error::Config(
                    "water network pencil is singular (a junction group has no head reference)"
                        .into(),
                ),
                other => other,
            }
        })?;
    let n_dyn = layout.blocks[0] + layout.blocks[1];
    let x_dyn = DVector::from_fn(n_dyn, |i, _| {
        let node = layout.order[i];
        T::lit(
            cfg.heads
                .iter()
                .find(|(h, _)| *h == node)
                .map_or(0.0, |h| h.1),
        )
    });
    let labels = cfg.outputs.iter().map(|o| o.to_string()).collect();
    let dynamic: Vec<usize> = (0..n_dyn).collect();
    let sc = Scenario::new(
        "water",
        system,
        out_idx,
        labels,
        cfg.controllable.clone(),
        &dynamic,
        &x_dyn,
    )?;
    sc.check_structure()?;
    Ok(sc)
}

/// Rejects topologies that break the block zero pattern: fixed reservoirs
/// only touch the first junction group, which touches no tank.
fn check_water_pattern(a: &DMatrix<f64>, layout: &WaterLayout) -> Result<()> {
    let [n1, n2, n3, n4] = layout.blocks;
    let off = [0, n1, n1 + n2, n1 + n2 + n3];
    let zero_blocks = [(1, 0), (1, 2), (2, 1), (3, 0)];
    for (r, c) in zero_blocks {
        let sizes = [n1, n2, n3, n4];
        let blk = a.view((off[r], off[c]), (sizes[r], sizes[c]));
        if blk.iter().any(|&v| v != 0.0) {
            return Err(Error::Config(format!(
                "links couple state groups x{} and x{}",
                r + 1,
                c + 1
            )));
        }
    }
    Ok(())
}

// ---------------------------------------------------------------- runs

/// Source description of a plant.
#[derive(Debug, Clone, PartialEq)]
pub enum PlantConfig {
    Power(PowerConfig),
    Water(WaterConfig),
}

impl PlantConfig {
    pub fn build(&self) -> Result<Scenario<f64>> {
        match self {
            PlantConfig::Power(c) => build_power(c),
            PlantConfig::Water(c) => build_water(c),
        }
    }
}

/// Plant, controller settings and setpoint schedule of one experiment.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub plant: PlantConfig,
    pub scenario: Scenario<f64>,
    pub deepc: DeePCConfig<f64>,
    pub schedule: Schedule<f64>,
}

fn base_deepc(m: usize, p: usize, n_past: usize, horizon: usize) -> DeePCConfig<f64> {
    DeePCConfig {
        n_past,
        horizon,
        t_data: 100,
        k_total: 200,
        q_weight: DMatrix::identity(p, p) * 5.0,
        r_weight: DMatrix::identity(m, m),
        u_box: vec![(-1.0, 1.0); m],
        terminal_enabled: false,
        alpha_reg: 0.0,
        qp: QpSettings::default(),
        seed: 1,
        delta: None,
    }
}

fn vec2(a: f64, b: f64) -> DVector<f64> {
    DVector::from_vec(vec![a, b])
}

// Controller and schedule defaults of the two cases, sized for the plant.
fn case_defaults(plant: &PlantConfig, m: usize, p: usize) -> (DeePCConfig<f64>, Schedule<f64>) {
    match plant {
        PlantConfig::Power(_) => {
            let mut deepc = base_deepc(m, p, 6, 14);
            // order N + L + q + s − 1 = 26 needs 78 Hankel rows, and T = 100 gives 75 columns
            deepc.delta = Some(5);
            let schedule = Schedule {
                initial: vec2(3.0, 3.0),
                switches: vec![(151, vec2(1.0, 5.0))],
            };
            (deepc, schedule)
        }
        PlantConfig::Water(_) => {
            let schedule = Schedule {
                initial: vec2(5.0, 3.0),
                switches: vec![(161, vec2(3.0, 5.0))],
            };
            (base_deepc(m, p, 5, 12), schedule)
        }
    }
}

fn default_run(plant: PlantConfig) -> RunConfig {
    let scenario = plant.build().expect("default plant builds");
    let (deepc, schedule) = case_defaults(&plant, scenario.qw.m(), scenario.qw.p());
    RunConfig {
        plant,
        scenario,
        deepc,
        schedule,
    }
}

/// Power network: N = 6, L = 14, T = 100, K = 200, setpoint (3, 3) then
/// (1, 5) from t = 151.
pub fn default_case1_config() -> RunConfig {
    default_run(PlantConfig::Power(PowerConfig::default()))
}

/// Water network: N = 5, L = 12, T = 100, K = 200, setpoint (5, 3) then
/// (3, 5) from t = 161.
pub fn default_case2_config() -> RunConfig {
    default_run(PlantConfig::Water(WaterConfig::default()))
}

impl RunConfig {
    /// Checks dimensions, and with the terminal constraint on, that every
    /// setpoint is a zero-input equilibrium output on the steered channels.
    pub fn validate(&self) -> Result<()> {
        self.deepc.validate()?;
        let qw = &self.scenario.qw;
        let (m, p) = (qw.m(), qw.p());
        if self.deepc.m() != m || self.deepc.p() != p {
            return Err(Error::Config(format!(
                "weights are sized for m = {}, p = {}",
                self.deepc.m(),
                self.deepc.p()
            )));
        }
        let setpoints = std::iter::once(&self.schedule.initial)
            .chain(self.schedule.switches.iter().map(|s| &s.1));
        if setpoints.clone().any(|y| y.len() != p) {
            return Err(Error::Config(format!("setpoints must have {p} entries")));
        }
        if self.schedule.switches.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(Error::Config("schedule switch times must increase".into()));
        }
        if self.deepc.terminal_enabled {
            // zero-input equilibria: z1 ∈ ker(A1 − I), y = C1 z1
            let q = qw.q();
            let eq = linalg::null_space(&(qw.a1() - DMatrix::identity(q, q)));
            let rows = &self.scenario.controllable_outputs;
            let full = qw.c1() * &eq;
            // eq is orthonormal, so entries at rounding level are structural zeros
            let floor = 1e-10 * full.amax().max(1.0);
            let reach = DMatrix::from_fn(rows.len(), eq.ncols(), |i, j| {
                let v = full[(rows[i], j)];
                if v.abs() > floor {
                    v
                } else {
                    0.0
                }
            });
            for (k, ys) in setpoints.enumerate() {
                let target = DVector::from_fn(rows.len(), |i, _| ys[rows[i]]);
                let fit = &reach * linalg::pinv(&reach) * &target;
                if (&fit - &target).amax() > 1e-8 * target.amax().max(1.0) {
                    return Err(Error::Config(format!(
                        "setpoint {k} is not a zero-input equilibrium output; disable the terminal constraint"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn run(&self) -> Result<ClosedLoopLog<f64>> {
        self.validate()?;
        crate::deepc::run_closed_loop(
            &self.scenario.qw,
            self.scenario.z1_0(),
            &self.deepc,
            &self.schedule,
        )
    }
}

// ---------------------------------------------------------------- summary

/// Tracking of one output over one constant-setpoint stretch of the
/// controlling phase.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseTracking {
    pub output: usize,
    pub start: usize,
    pub end: usize,
    pub setpoint: f64,
    pub final_error: f64,
    pub min_error: f64,
    /// First step from which the error stays within [`SETTLE_BAND`] to `end`.
    pub settled_at: Option<usize>,
}

impl PhaseTracking {
    pub fn settled_within(&self, steps: usize) -> bool {
        self.settled_at.is_some_and(|t| t - self.start <= steps)
    }
}

/// Splits the controlling rows at the schedule switches and measures every
/// output against its setpoint on each stretch.
pub fn tracking_summary(log: &ClosedLoopLog<f64>, schedule: &Schedule<f64>) -> Vec<PhaseTracking> {
    let Some(first) = log.rows.iter().position(|r| r.phase == Phase::Controlling) else {
        return Vec::new();
    };
    let last = log.rows.len() - 1;
    let mut bounds = vec![first];
    bounds.extend(
        schedule
            .switches
            .iter()
            .map(|s| s.0)
            .filter(|&t| t > first && t <= last),
    );
    bounds.push(last + 1);
    let p = log.rows[0].y.len();
    let mut out = Vec::new();
    for w in bounds.windows(2) {
        let (start, end) = (w[0], w[1] - 1);
        let ys = schedule.at(start);
        for o in 0..p {
            let err: Vec<f64> = (start..=end)
                .map(|t| (log.rows[t].y[o] - ys[o]).abs())
                .collect();
            let settled_at = match err.iter().rposition(|&e| e > SETTLE_BAND) {
                None => Some(start),
                Some(i) if start + i < end => Some(start + i + 1),
                Some(_) => None,
            };
            out.push(PhaseTracking {
                output: o,
                start,
                end,
                setpoint: ys[o],
                final_error: *err.last().unwrap(),
                min_error: err.iter().cloned().fold(f64::INFINITY, f64::min),
                settled_at,
            });
        }
    }
    out
}

// ---------------------------------------------------------------- files

// TOML layout of a run file. Every key is optional; missing keys keep the
// case defaults of the chosen plant.

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunFile {
    #[serde(skip_serializing_if = "Option::is_none")]
    power: Option<PowerFile>,
    #[serde(skip_serializing_if = "Option::is_none")]
    water: Option<WaterFile>,
    #[serde(skip_serializing_if = "Option::is_none")]
    deepc: Option<DeepcFile>,
    #[serde(skip_serializing_if = "Option::is_none")]
    schedule: Option<ScheduleFile>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PowerFile {
    g: Option<usize>,
    n_bus: Option<usize>,
    tau: Option<f64>,
    inertia: Option<Vec<f64>>,
    damping: Option<Vec<f64>>,
    /// `[bus, bus, susceptance]`, buses 1-based.
    lines: Option<Vec<(usize, usize, f64)>>,
    b_pattern: Option<Vec<Vec<f64>>>,
    /// 1-based state indices.
    outputs: Option<Vec<usize>>,
    /// 1-based output numbers.
    controllable: Option<Vec<usize>>,
    omega0: Option<Vec<f64>>,
    theta0: Option<Vec<f64>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LinkFile {
    kind: String,
    from: String,
    to: String,
    conductance: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct HeadFile {
    node: String,
    head: f64,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WaterFile {
    reservoirs: Option<usize>,
    tanks: Option<usize>,
    junctions: Option<usize>,
    tau: Option<f64>,
    areas: Option<Vec<f64>>,
    input_junction: Option<String>,
    input_pattern: Option<Vec<f64>>,
    outputs: Option<Vec<String>>,
    /// 1-based output numbers.
    controllable: Option<Vec<usize>>,
    links: Option<Vec<LinkFile>>,
    heads: Option<Vec<HeadFile>>,
}

/// A scalar broadcast over every channel, or one value per channel.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum PerChannel {
    All(f64),
    Each(Vec<f64>),
}

impl PerChannel {
    fn expand(&self, n: usize, key: &str) -> Result<Vec<f64>> {
        match self {
            PerChannel::All(v) => Ok(vec![*v; n]),
            PerChannel::Each(v) if v.len() == n => Ok(v.clone()),
            PerChannel::Each(v) => Err(Error::Config(format!(
                "{key}: expected 1 or {n} entries, got {}",
                v.len()
            ))),
        }
    }
}

/// `δ` as a number, or `"q"` for the slow dimension.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum DeltaFile {
    Fixed(usize),
    Named(String),
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DeepcFile {
    n_past: Option<usize>,
    horizon: Option<usize>,
    t_data: Option<usize>,
    k_total: Option<usize>,
    /// Diagonal of Q.
    q_weight: Option<PerChannel>,
    /// Diagonal of R.
    r_weight: Option<PerChannel>,
    u_min: Option<PerChannel>,
    u_max: Option<PerChannel>,
    terminal: Option<bool>,
    alpha_reg: Option<f64>,
    seed: Option<u64>,
    delta: Option<DeltaFile>,
    eps_abs: Option<f64>,
    max_iter: Option<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SwitchFile {
    t: usize,
    ys: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScheduleFile {
    initial: Vec<f64>,
    #[serde(default)]
    switches: Vec<SwitchFile>,
}

fn node(label: &str) -> Result<Node> {
    label.parse()
}

fn one_based(v: &[usize], key: &str) -> Result<Vec<usize>> {
    v.iter()
        .map(|&i| {
            i.checked_sub(1)
                .ok_or_else(|| Error::Config(format!("{key}: indices are 1-based")))
        })
        .collect()
}

fn power_from(f: PowerFile) -> Result<PowerConfig> {
    let mut cfg = PowerConfig::default();
    if let Some(v) = f.g {
        cfg.g = v;
    }
    if let Some(v) = f.n_bus {
        cfg.n_bus = v;
    }
    if let Some(v) = f.tau {
        cfg.tau = v;
    }
    if let Some(v) = f.inertia {
        cfg.inertia = v;
    }
    if let Some(v) = f.damping {
        cfg.damping = v;
    }
    if let Some(lines) = f.lines {
        let n = cfg.n_bus;
        cfg.susceptance = DMatrix::zeros(n, n);
        for (i, j, b) in lines {
            if i == 0 || j == 0 || i > n || j > n {
                return Err(Error::Config(format!(
                    "line ({i}, {j}) outside buses 1..={n}"
                )));
            }
            cfg.susceptance[(i - 1, j - 1)] = b;
            cfg.susceptance[(j - 1, i - 1)] = b;
        }
    }
    if let Some(rows) = f.b_pattern {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Config("b_pattern rows differ in length".into()));
        }
        cfg.b_pattern = DMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j]);
    }
    if let Some(v) = f.outputs {
        cfg.outputs = one_based(&v, "outputs")?;
    }
    if let Some(v) = f.controllable {
        cfg.controllable = one_based(&v, "controllable")?;
    }
    if let Some(v) = f.omega0 {
        cfg.omega0 = v;
    }
    if let Some(v) = f.theta0 {
        cfg.theta0 = v;
    }
    Ok(cfg)
}

fn water_from(f: WaterFile) -> Result<WaterConfig> {
    let mut cfg = WaterConfig::default();
    if let Some(v) = f.reservoirs {
        cfg.reservoirs = v;
    }
    if let Some(v) = f.tanks {
        cfg.tanks = v;
    }
    if let Some(v) = f.junctions {
        cfg.junctions = v;
    }
    if let Some(v) = f.tau {
        cfg.tau = v;
    }
    if let Some(v) = f.areas {
        cfg.areas = v;
    }
    if let Some(v) = f.input_junction {
        match node(&v)? {
            Node::Junction(j) => cfg.input_junction = j,
            _ => {
                return Err(Error::Config(format!(
                    "input_junction: {v} is not a junction"
                )))
            }
        }
    }
    if let Some(v) = f.input_pattern {
        cfg.input_pattern = v;
    }
    if let Some(v) = f.outputs {
        cfg.outputs = v.iter().map(|o| node(o)).collect::<Result<_>>()?;
    }
    if let Some(v) = f.controllable {
        cfg.controllable = one_based(&v, "controllable")?;
    }
    if let Some(links) = f.links {
        cfg.links = links
            .iter()
            .map(|l| {
                Ok(Link {
                    kind: l.kind.parse()?,
                    from: node(&l.from)?,
                    to: node(&l.to)?,
                    conductance: l.conductance,
                })
            })
            .collect::<Result<_>>()?;
    }
    if let Some(heads) = f.heads {
        cfg.heads = heads
            .iter()
            .map(|h| Ok((node(&h.node)?, h.head)))
            .collect::<Result<_>>()?;
    }
    Ok(cfg)
}

fn apply_deepc(f: DeepcFile, cfg: &mut DeePCConfig<f64>, m: usize, p: usize) -> Result<()> {
    let diag = |v: Vec<f64>| DMatrix::from_diagonal(&DVector::from_vec(v));
    if let Some(v) = f.n_past {
        cfg.n_past = v;
    }
    if let Some(v) = f.horizon {
        cfg.horizon = v;
    }
    if let Some(v) = f.t_data {
        cfg.t_data = v;
    }
    if let Some(v) = f.k_total {
        cfg.k_total = v;
    }
    if let Some(v) = f.q_weight {
        cfg.q_weight = diag(v.expand(p, "q_weight")?);
    }
    if let Some(v) = f.r_weight {
        cfg.r_weight = diag(v.expand(m, "r_weight")?);
    }
    if let Some(v) = f.u_min {
        for (b, lo) in cfg.u_box.iter_mut().zip(v.expand(m, "u_min")?) {
            b.0 = lo;
        }
    }
    if let Some(v) = f.u_max {
        for (b, hi) in cfg.u_box.iter_mut().zip(v.expand(m, "u_max")?) {
            b.1 = hi;
        }
    }
    if let Some(v) = f.terminal {
        cfg.terminal_enabled = v;
    }
    if let Some(v) = f.alpha_reg {
        cfg.alpha_reg = v;
    }
    if let Some(v) = f.seed {
        cfg.seed = v;
    }
    match f.delta {
        None => {}
        Some(DeltaFile::Fixed(v)) => cfg.delta = Some(v),
        Some(DeltaFile::Named(s)) if s == "q" => cfg.delta = None,
        Some(DeltaFile::Named(s)) => {
            return Err(Error::Config(format!(
                "delta: expected a number or \"q\", got {s:?}"
            )))
        }
    }
    if let Some(v) = f.eps_abs {
        cfg.qp.eps_abs = v;
    }
    if let Some(v) = f.max_iter {
        cfg.qp.max_iter = v;
    }
    Ok(())
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Reads a TOML run description. The file holds exactly one of `[power]` or
/// `[water]`; keys left out keep the matching case defaults, and `[deepc]`
/// and `[schedule]` are optional.
pub fn parse_run_config(text: &str) -> Result<RunConfig> {
    let file: RunFile = toml::from_str(text).map_err(|e| Error::Parse {
        line: e.span().map_or(0, |s| line_of(text, s.start)),
        msg: e.message().to_string(),
    })?;
    let plant = match (file.power, file.water) {
        (Some(f), None) => PlantConfig::Power(power_from(f)?),
        (None, Some(f)) => PlantConfig::Water(water_from(f)?),
        _ => {
            return Err(Error::Config(
                "a config needs exactly one [power] or [water] table".into(),
            ))
        }
    };
    let scenario = plant.build()?;
    let (m, p) = (scenario.qw.m(), scenario.qw.p());
    let (mut deepc, mut schedule) = case_defaults(&plant, m, p);
    if schedule.initial.len() != p {
        schedule = Schedule::constant(DVector::zeros(p));
    }
    if let Some(f) = file.deepc {
        apply_deepc(f, &mut deepc, m, p)?;
    }
    if let Some(f) = file.schedule {
        schedule = Schedule {
            initial: DVector::from_vec(f.initial),
            switches: f
                .switches
                .into_iter()
                .map(|s| (s.t, DVector::from_vec(s.ys)))
                .collect(),
        };
    }
    let rc = RunConfig {
        plant,
        scenario,
        deepc,
        schedule,
    };
    rc.validate()?;
    Ok(rc)
}

fn one_based_out(v: &[usize]) -> Option<Vec<usize>> {
    Some(v.iter().map(|i| i + 1).collect())
}

impl RunConfig {
    /// TOML form read back by [`parse_run_config`], with every key spelled out.
    pub fn to_text(&self) -> String {
        let mut file = RunFile::default();
        match &self.plant {
            PlantConfig::Power(c) => {
                let mut lines = Vec::new();
                for i in 0..c.n_bus {
                    for j in i + 1..c.n_bus {
                        if c.susceptance[(i, j)] != 0.0 {
                            lines.push((i + 1, j + 1, c.susceptance[(i, j)]));
                        }
                    }
                }
                file.power = Some(PowerFile {
                    g: Some(c.g),
                    n_bus: Some(c.n_bus),
                    tau: Some(c.tau),
                    inertia: Some(c.inertia.clone()),
                    damping: Some(c.damping.clone()),
                    lines: Some(lines),
                    b_pattern: Some(
                        c.b_pattern
                            .row_iter()
                            .map(|r| r.iter().copied().collect())
                            .collect(),
                    ),
                    outputs: one_based_out(&c.outputs),
                    controllable: one_based_out(&c.controllable),
                    omega0: Some(c.omega0.clone()),
                    theta0: Some(c.theta0.clone()),
                });
            }
            PlantConfig::Water(c) => {
                file.water = Some(WaterFile {
                    reservoirs: Some(c.reservoirs),
                    tanks: Some(c.tanks),
                    junctions: Some(c.junctions),
                    tau: Some(c.tau),
                    areas: Some(c.areas.clone()),
                    input_junction: Some(Node::Junction(c.input_junction).to_string()),
                    input_pattern: Some(c.input_pattern.clone()),
                    outputs: Some(c.outputs.iter().map(Node::to_string).collect()),
                    controllable: one_based_out(&c.controllable),
                    links: Some(
                        c.links
                            .iter()
                            .map(|l| LinkFile {
                                kind: l.kind.to_string(),
                                from: l.from.to_string(),
                                to: l.to.to_string(),
                                conductance: l.conductance,
                            })
                            .collect(),
                    ),
                    heads: Some(
                        c.heads
                            .iter()
                            .map(|(n, h)| HeadFile {
                                node: n.to_string(),
                                head: *h,
                            })
                            .collect(),
                    ),
                });
            }
        }
        let d = &self.deepc;
        file.deepc = Some(DeepcFile {
            n_past: Some(d.n_past),
            horizon: Some(d.horizon),
            t_data: Some(d.t_data),
            k_total: Some(d.k_total),
            q_weight: Some(PerChannel::Each(
                d.q_weight.diagonal().iter().copied().collect(),
            )),
            r_weight: Some(PerChannel::Each(
                d.r_weight.diagonal().iter().copied().collect(),
            )),
            u_min: Some(PerChannel::Each(d.u_box.iter().map(|b| b.0).collect())),
            u_max: Some(PerChannel::Each(d.u_box.iter().map(|b| b.1).collect())),
            terminal: Some(d.terminal_enabled),
            alpha_reg: Some(d.alpha_reg),
            seed: Some(d.seed),
            delta: Some(
                d.delta
                    .map_or(DeltaFile::Named("q".into()), DeltaFile::Fixed),
            ),
            eps_abs: Some(d.qp.eps_abs),
            max_iter: Some(d.qp.max_iter),
        });
        file.schedule = Some(ScheduleFile {
            initial: self.schedule.initial.iter().copied().collect(),
            switches: self
                .schedule
                .switches
                .iter()
                .map(|(t, ys)| SwitchFile {
                    t: *t,
                    ys: ys.iter().copied().collect(),
                })
                .collect(),
        });
        toml::to_string(&file).expect("run file serializes")
    }
}
