use super::kernel::{tail_weight, KernelTable};
use super::power::PowerLaw;
use super::{LocalForm, OperatorParams};
use crate::error::EnergyError;
use crate::geometry::{DomainMask, Lattice};
use crate::par;
use crate::rearrange::GridFunction;

/// Unweighted energy parts of a function supported in the mask.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergyParts {
    pub local: f64,
    pub nonlocal: f64,
}

/// Off-mask node of the euclidean stencil: forward neighbors that sit in the mask.
#[derive(Clone, Debug)]
struct StencilNode {
    own: Option<usize>,
    forward: [Option<usize>; 2],
}

/// The local and nonlocal energies restricted to functions vanishing off
/// `mask`, with everything that only depends on the mask precomputed:
/// kernel weights, exterior kernel mass per node and the tail.
///
/// Vectors passed in are indexed by position in `mask.indices()`.
#[derive(Clone, Debug)]
pub struct MaskedOperator {
    mask: DomainMask,
    params: OperatorParams,
    law: PowerLaw,
    nodes: Vec<usize>,
    multi: Vec<[usize; 2]>,
    kernel: KernelTable,
    /// `2 Σ_{j ∈ box \ Ω} K_ij + 2 h^d κ_i`: coefficient of `|u_i|^p`.
    exterior: Vec<f64>,
    /// In-mask forward neighbors (edge form).
    forward: Vec<[Option<usize>; 2]>,
    /// Neighbors outside the mask (edge form).
    outside_neighbors: Vec<u8>,
    /// Stencil nodes whose forward differences can be nonzero (euclidean form).
    stencil: Vec<StencilNode>,
    local_scale: f64,
}

impl MaskedOperator {
    pub fn new(mask: &DomainMask, params: &OperatorParams) -> Result<Self, EnergyError> {
        params.validate()?;
        let lattice = *mask.lattice();
        let nodes = mask.indices();
        if params.tail {
            if let Some(&i) = nodes.iter().find(|&&i| lattice.is_boundary_node(i)) {
                return Err(EnergyError::SupportTouchesBoundary(i));
            }
        }
        let mut position = vec![usize::MAX; lattice.len()];
        for (k, &i) in nodes.iter().enumerate() {
            position[i] = k;
        }
        let reduced = |i: Option<usize>| i.and_then(|i| (position[i] != usize::MAX).then(|| position[i]));
        let multi: Vec<[usize; 2]> = nodes.iter().map(|&i| lattice.multi_index(i)).collect();
        let kernel = KernelTable::new(&lattice, params.s, params.p);
        let d = lattice.dim();

        let exterior = if params.b != 0.0 {
            par::map_range(nodes.len(), |k| {
                let mk = multi[k];
                let mut acc = 0.0;
                for j in 0..lattice.len() {
                    if position[j] == usize::MAX {
                        acc += kernel.between(mk, lattice.multi_index(j));
                    }
                }
                2.0 * acc + tail_weight(&lattice, nodes[k], params)
            })
        } else {
            vec![0.0; nodes.len()]
        };

        let forward = nodes
            .iter()
            .map(|&i| {
                let mut f = [None; 2];
                for (k, slot) in f.iter_mut().enumerate().take(d) {
                    *slot = reduced(lattice.neighbor(i, k, true));
                }
                f
            })
            .collect();
        let outside_neighbors = nodes
            .iter()
            .map(|&i| lattice.neighbors(i).filter(|nb| reduced(*nb).is_none()).count() as u8)
            .collect();
        let stencil = if params.local_form == LocalForm::Euclidean { build_stencil(&lattice, mask, &position) } else { Vec::new() };

        Ok(Self {
            mask: mask.clone(),
            params: *params,
            law: PowerLaw::new(params.p),
            nodes,
            multi,
            kernel,
            exterior,
            forward,
            outside_neighbors,
            stencil,
            local_scale: lattice.h().powf(d as f64 - params.p),
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn mask(&self) -> &DomainMask {
        &self.mask
    }

    pub fn lattice(&self) -> &Lattice {
        self.mask.lattice()
    }

    pub fn params(&self) -> &OperatorParams {
        &self.params
    }

    /// Box indices of the reduced unknowns.
    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    pub fn multi_indices(&self) -> &[[usize; 2]] {
        &self.multi
    }

    pub fn kernel(&self) -> &KernelTable {
        &self.kernel
    }

    /// Exterior kernel mass plus tail for reduced node `k`.
    pub fn exterior_weight(&self, k: usize) -> f64 {
        self.exterior[k]
    }

    pub fn outside_neighbor_count(&self, k: usize) -> usize {
        self.outside_neighbors[k] as usize
    }

    pub fn forward_neighbors(&self, k: usize) -> [Option<usize>; 2] {
        self.forward[k]
    }

    pub fn local_scale(&self) -> f64 {
        self.local_scale
    }

    /// `h^d Σ |u_k|^p`.
    pub fn lp_norm_p(&self, u: &[f64]) -> f64 {
        let law = self.law;
        self.lattice().cell_volume() * par::pairwise_sum(&u.iter().map(|&v| law.pow(v)).collect::<Vec<_>>())
    }

    pub fn weighted(&self, parts: EnergyParts) -> f64 {
        self.params.a * parts.local + self.params.b * parts.nonlocal
    }

    pub fn energy(&self, u: &[f64]) -> EnergyParts {
        let local = if self.params.a != 0.0 { self.local_energy(u) } else { 0.0 };
        let nonlocal = if self.params.b != 0.0 { self.nonlocal_energy(u) } else { 0.0 };
        EnergyParts { local, nonlocal }
    }

    /// Energy parts and the gradient of the weighted numerator.
    pub fn energy_and_gradient(&self, u: &[f64]) -> (EnergyParts, Vec<f64>) {
        let mut grad = vec![0.0; u.len()];
        let local = if self.params.a != 0.0 { self.local_with_gradient(u, &mut grad) } else { 0.0 };
        let nonlocal = if self.params.b != 0.0 { self.nonlocal_with_gradient(u, &mut grad) } else { 0.0 };
        (EnergyParts { local, nonlocal }, grad)
    }

    fn local_energy(&self, u: &[f64]) -> f64 {
        let law = self.law;
        let raw = match self.params.local_form {
            LocalForm::Edge => par::sum_range(u.len(), |k| {
                let uk = u[k];
                let mut acc = self.outside_neighbors[k] as f64 * law.pow(uk);
                for nb in self.forward[k].iter().flatten() {
                    acc += law.pow(u[*nb] - uk);
                }
                acc
            }),
            LocalForm::Euclidean => par::sum_range(self.stencil.len(), |g| law.pow(self.stencil_sq(u, g).sqrt())),
        };
        self.local_scale * raw
    }

    fn stencil_value(u: &[f64], k: Option<usize>) -> f64 {
        k.map(|k| u[k]).unwrap_or(0.0)
    }

    fn stencil_sq(&self, u: &[f64], g: usize) -> f64 {
        let node = &self.stencil[g];
        let here = Self::stencil_value(u, node.own);
        let d = self.lattice().dim();
        (0..d).map(|k| (Self::stencil_value(u, node.forward[k]) - here).powi(2)).sum()
    }

    fn local_with_gradient(&self, u: &[f64], grad: &mut [f64]) -> f64 {
        let law = self.law;
        let p = self.params.p;
        let scale = self.local_scale;
        let wa = self.params.a * p * scale;
        match self.params.local_form {
            LocalForm::Edge => {
                let energy = par::sum_range(u.len(), |k| {
                    let uk = u[k];
                    let mut acc = self.outside_neighbors[k] as f64 * law.pow(uk);
                    for nb in self.forward[k].iter().flatten() {
                        acc += law.pow(u[*nb] - uk);
                    }
                    acc
                });
                for k in 0..u.len() {
                    let uk = u[k];
                    grad[k] += wa * self.outside_neighbors[k] as f64 * law.phi(uk);
                    for nb in self.forward[k].iter().flatten() {
                        let f = law.phi(uk - u[*nb]);
                        grad[k] += wa * f;
                        grad[*nb] -= wa * f;
                    }
                }
                scale * energy
            }
            LocalForm::Euclidean => {
                let d = self.lattice().dim();
                let mut energy = Vec::with_capacity(self.stencil.len());
                for (g, node) in self.stencil.iter().enumerate() {
                    let sq = self.stencil_sq(u, g);
                    energy.push(law.pow(sq.sqrt()));
                    if sq == 0.0 {
                        continue;
                    }
                    let coef = sq.powf(p / 2.0 - 1.0);
                    let here = Self::stencil_value(u, node.own);
                    for k in 0..d {
                        let delta = Self::stencil_value(u, node.forward[k]) - here;
                        if let Some(o) = node.own {
                            grad[o] -= wa * coef * delta;
                        }
                        if let Some(f) = node.forward[k] {
                            grad[f] += wa * coef * delta;
                        }
                    }
                }
                scale * par::pairwise_sum(&energy)
            }
        }
    }

    fn nonlocal_energy(&self, u: &[f64]) -> f64 {
        let law = self.law;
        let n = u.len();
        par::sum_range(n, |i| {
            let ui = u[i];
            let mi = self.multi[i];
            let mut acc = 0.0;
            for j in i + 1..n {
                acc += law.pow(ui - u[j]) * self.kernel.between(mi, self.multi[j]);
            }
            2.0 * acc + law.pow(ui) * self.exterior[i]
        })
    }

    fn nonlocal_with_gradient(&self, u: &[f64], grad: &mut [f64]) -> f64 {
        let law = self.law;
        let p = self.params.p;
        let n = u.len();
        let rows = par::map_range(n, |i| {
            let ui = u[i];
            let mi = self.multi[i];
            let mut e = 0.0;
            let mut g = 0.0;
            for j in 0..n {
                if j != i {
                    let w = self.kernel.between(mi, self.multi[j]);
                    let (pw, ph) = law.both(ui - u[j]);
                    e += pw * w;
                    g += ph * w;
                }
            }
            let (pw, ph) = law.both(ui);
            (e + pw * self.exterior[i], 2.0 * p * g + p * ph * self.exterior[i])
        });
        let wb = self.params.b;
        let energies: Vec<f64> = rows.iter().map(|r| r.0).collect();
        for (g, r) in grad.iter_mut().zip(&rows) {
            *g += wb * r.1;
        }
        par::pairwise_sum(&energies)
    }

    /// Scatters reduced values into a grid function on the mask.
    pub fn to_grid(&self, u: &[f64]) -> GridFunction {
        let mut values = vec![0.0; self.lattice().len()];
        for (&i, &v) in self.nodes.iter().zip(u) {
            values[i] = v;
        }
        GridFunction::new(self.mask.clone(), values).expect("values live on the mask")
    }

    /// Gathers the mask values of `f`.
    pub fn from_grid(&self, f: &GridFunction) -> Vec<f64> {
        self.nodes.iter().map(|&i| f.value(i)).collect()
    }
}

fn build_stencil(lattice: &Lattice, mask: &DomainMask, position: &[usize]) -> Vec<StencilNode> {
    let d = lattice.dim();
    let reduced = |m: [i64; 2]| lattice.checked_index(m).and_then(|i| (position[i] != usize::MAX).then(|| position[i]));
    let [nx, ny] = lattice.extent();
    let (gx, gy, off) = if d == 2 { (nx + 1, ny + 1, 1) } else { (nx + 1, 1, 0) };
    let mut out = Vec::new();
    for g in 0..gx * gy {
        let m = [(g % gx) as i64 - 1, (g / gx) as i64 - off];
        let own = reduced(m);
        let mut forward = [None; 2];
        for (k, slot) in forward.iter_mut().enumerate().take(d) {
            let mut f = m;
            f[k] += 1;
            *slot = reduced(f);
        }
        if own.is_some() || forward.iter().any(Option::is_some) {
            out.push(StencilNode { own, forward });
        }
    }
    debug_assert!(mask.count() <= out.len());
    out
}
