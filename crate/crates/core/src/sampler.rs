//! Discrete approximations of Levy trees.
//!
//! At resolution `n` each individual carries mass `1/n` per unit length and
//! lives `1/gamma`. Its offspring law has generating function
//! `g(s) = s + psi(n(1 - s)) / (n gamma)`: it dies, has two children, or has
//! a Poisson(`n Z`) litter where `Z` is drawn from a jump primitive.

use rand::Rng as _;
use rand_distr::{Binomial, Distribution, Exp1, Gamma, Poisson, StandardNormal};

use crate::error::{invalid, Error, Result};
use crate::mechanism::{Criticality, Mechanism, Primitive};
use crate::real::Real;
use crate::rng::Rng;
use crate::tree::{FiniteTree, Node, NodeKind};

/// Largest number of nodes a single sampled tree may have.
pub const NODE_LIMIT: usize = 20_000_000;

#[derive(Debug, Clone)]
pub struct GwScheme<T> {
    mech: Mechanism<T>,
    n: T,
    gamma: T,
    p_death: f64,
    p_stay: f64,
    p_binary: f64,
    p_jump: Vec<f64>,
    cumulative: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Event<T> {
    Death,
    Stay,
    Binary,
    Jump { size: T },
}

impl<T: Real> GwScheme<T> {
    /// Scheme for a (sub)critical grey mechanism. `gamma` defaults to the
    /// smallest admissible rate.
    pub fn new(mech: &Mechanism<T>, n: T, gamma: Option<T>) -> Result<Self> {
        if !(n > T::zero() && n.is_finite()) {
            return invalid(format!("resolution must be positive, got {n}"));
        }
        if !mech.is_grey() {
            return Err(Error::Precondition("discrete trees need c > 0".into()));
        }
        if mech.classify() == Criticality::Supercritical {
            return Err(Error::Precondition("supercritical mechanisms have infinite trees".into()));
        }
        let (b, c) = (mech.b(), mech.c());
        let j1 = mech.jump_first_moment();
        let gamma_min = b + (c + c) * n + j1;
        let gamma = gamma.unwrap_or(gamma_min);
        if gamma < gamma_min {
            return invalid(format!("rate {gamma} below the minimum {gamma_min}"));
        }
        let death = (b + c * n + j1 - mech.jump_mass() / n) / gamma;
        if death < -T::epsilon() {
            return invalid(format!("resolution {n} too coarse for the jump part"));
        }
        let p_death = death.max(T::zero()).f64();
        let p_binary = (c * n / gamma).f64();
        let p_jump: Vec<f64> = mech.jumps().iter().map(|p| (p.weight() / (n * gamma)).f64()).collect();
        let p_stay = (1.0 - p_death - p_binary - p_jump.iter().sum::<f64>()).max(0.0);
        let mut cumulative = Vec::with_capacity(3 + p_jump.len());
        let mut acc = 0.0;
        for p in [p_death, p_stay, p_binary].iter().chain(p_jump.iter()) {
            acc += p;
            cumulative.push(acc);
        }
        Ok(GwScheme { mech: mech.clone(), n, gamma, p_death, p_stay, p_binary, p_jump, cumulative })
    }

    pub fn mechanism(&self) -> &Mechanism<T> {
        &self.mech
    }

    pub fn resolution(&self) -> T {
        self.n
    }

    pub fn rate(&self) -> T {
        self.gamma
    }

    pub fn mean_offspring(&self) -> T {
        T::one() - self.mech.b() / self.gamma
    }

    /// Offspring probabilities `p_0, ..., p_kmax`.
    pub fn offspring_pmf(&self, kmax: usize) -> Vec<f64> {
        let mut p = vec![0.0; kmax + 1];
        p[0] += self.p_death;
        if kmax >= 1 {
            p[1] += self.p_stay;
        }
        if kmax >= 2 {
            p[2] += self.p_binary;
        }
        let n = self.n.f64();
        for (prim, &pj) in self.mech.jumps().iter().zip(&self.p_jump) {
            match *prim {
                Primitive::PointMass { z, .. } => {
                    let mu = n * z.f64();
                    let mut logp = -mu;
                    for (k, slot) in p.iter_mut().enumerate() {
                        if k > 0 {
                            logp += mu.ln() - (k as f64).ln();
                        }
                        *slot += pj * logp.exp();
                    }
                }
                Primitive::GammaDensity { k: shape, rho, .. } => {
                    let (r, rho) = (shape.f64(), rho.f64());
                    let q = n / (rho + n);
                    let mut logp = r * (rho / (rho + n)).ln();
                    for (k, slot) in p.iter_mut().enumerate() {
                        if k > 0 {
                            logp += ((k as f64 - 1.0 + r) / k as f64).ln() + q.ln();
                        }
                        *slot += pj * logp.exp();
                    }
                }
            }
        }
        p
    }

    /// Closed form of the offspring generating function.
    pub fn pgf(&self, s: T) -> T {
        s + self.mech.eval(self.n * (T::one() - s)) / (self.n * self.gamma)
    }

    pub(crate) fn draw<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> Event<T> {
        let u: f64 = rng.random();
        let i = self.cumulative.iter().position(|&c| u < c).unwrap_or(self.cumulative.len() - 1);
        match i {
            0 => Event::Death,
            1 => Event::Stay,
            2 => Event::Binary,
            j => Event::Jump { size: draw_size(&self.mech.jumps()[j - 3], rng) },
        }
    }

    pub(crate) fn litter<R: rand::Rng + ?Sized>(&self, size: T, rng: &mut R) -> u64 {
        poisson(self.n.f64() * size.f64(), rng)
    }
}

fn draw_size<T: Real, R: rand::Rng + ?Sized>(p: &Primitive<T>, rng: &mut R) -> T {
    match *p {
        Primitive::PointMass { z, .. } => z,
        Primitive::GammaDensity { k, rho, .. } => {
            T::lit(Gamma::new(k.f64(), 1.0 / rho.f64()).expect("valid gamma").sample(rng))
        }
    }
}

pub(crate) fn poisson<R: rand::Rng + ?Sized>(mean: f64, rng: &mut R) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    if mean < 12.0 {
        // Inversion is cheaper than setting up the general sampler.
        let u: f64 = rng.random();
        let mut p = (-mean).exp();
        let (mut cdf, mut k) = (p, 0u64);
        while u > cdf && p > 0.0 {
            k += 1;
            p *= mean / k as f64;
            cdf += p;
        }
        return k;
    }
    Poisson::new(mean).expect("finite poisson mean").sample(rng) as u64
}

fn binomial<R: rand::Rng + ?Sized>(n: u64, p: f64, rng: &mut R) -> u64 {
    if n == 0 || p <= 0.0 {
        return 0;
    }
    if p >= 1.0 {
        return n;
    }
    Binomial::new(n, p).expect("valid binomial").sample(rng)
}

/// What to do after an edge has been laid down.
pub(crate) enum Expand<T> {
    Children,
    /// Keep the node but do not grow its offspring.
    Stop,
    /// Shorten the edge to the given length and end it in a leaf.
    Cut(T),
}

pub(crate) trait EdgeHook<T> {
    fn edge(&mut self, rng: &mut Rng, node: usize, length: T, kind: NodeKind<T>) -> Result<Expand<T>>;
}

pub(crate) struct NoHook;

impl<T> EdgeHook<T> for NoHook {
    fn edge(&mut self, _: &mut Rng, _: usize, _: T, _: NodeKind<T>) -> Result<Expand<T>> {
        Ok(Expand::Children)
    }
}

/// A lineage waiting to be grown: an individual born at `base + start / gamma`
/// below node `parent`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Lineage<T> {
    pub parent: usize,
    pub base: T,
    pub start: u64,
}

/// Grows every lineage depth first, appending nodes. Returns the number of
/// edges truncated by the cap.
pub(crate) fn grow<T: Real, H: EdgeHook<T>>(
    scheme: &GwScheme<T>,
    nodes: &mut Vec<Node<T>>,
    mut stack: Vec<Lineage<T>>,
    cap: Option<T>,
    hook: &mut H,
    rng: &mut Rng,
) -> Result<u64> {
    let gamma = scheme.gamma;
    let density = T::one() / scheme.n;
    let mut capped = 0;
    while let Some(lin) = stack.pop() {
        let born = lin.base + T::count(lin.start) / gamma;
        let mut j = lin.start;
        let (length, kind, litter) = loop {
            let end = lin.base + T::count(j + 1) / gamma;
            if let Some(h) = cap {
                if end > h {
                    capped += 1;
                    break ((h - born).max(T::zero()), NodeKind::Leaf, 0);
                }
            }
            match scheme.draw(rng) {
                Event::Stay => j += 1,
                Event::Death => break (T::count(j + 1 - lin.start) / gamma, NodeKind::Leaf, 0),
                Event::Binary => break (T::count(j + 1 - lin.start) / gamma, NodeKind::Binary, 2),
                Event::Jump { size } => {
                    let k = scheme.litter(size, rng);
                    let kind = if k == 0 { NodeKind::Leaf } else { NodeKind::Infinite { delta: size } };
                    break (T::count(j + 1 - lin.start) / gamma, kind, k);
                }
            }
        };
        let id = nodes.len();
        if id >= NODE_LIMIT {
            return Err(Error::SizeLimit(format!("tree exceeded {NODE_LIMIT} nodes")));
        }
        nodes.push(Node::child(lin.parent, length, kind, density));
        match hook.edge(rng, id, length, kind)? {
            Expand::Children => {
                for _ in 0..litter {
                    stack.push(Lineage { parent: id, base: lin.base, start: j + 1 });
                }
            }
            Expand::Stop => {}
            Expand::Cut(len) => {
                nodes[id].length = len;
                nodes[id].kind = NodeKind::Leaf;
            }
        }
    }
    Ok(capped)
}

pub(crate) fn grow_from_root<T: Real, H: EdgeHook<T>>(
    scheme: &GwScheme<T>,
    root: NodeKind<T>,
    ancestors: u64,
    cap: Option<T>,
    hook: &mut H,
    rng: &mut Rng,
) -> Result<FiniteTree<T>> {
    let (tree, _) = grow_counting(scheme, root, ancestors, cap, hook, rng)?;
    Ok(tree)
}

/// As [`grow_from_root`], also returning the number of edges cut by the cap.
pub(crate) fn grow_counting<T: Real, H: EdgeHook<T>>(
    scheme: &GwScheme<T>,
    root: NodeKind<T>,
    ancestors: u64,
    cap: Option<T>,
    hook: &mut H,
    rng: &mut Rng,
) -> Result<(FiniteTree<T>, u64)> {
    let mut nodes = vec![Node::root(root)];
    let stack = (0..ancestors).map(|_| Lineage { parent: 0, base: T::zero(), start: 0 }).collect();
    let crossing = grow(scheme, &mut nodes, stack, cap, hook, rng)?;
    let scale = T::one() / scheme.n;
    Ok((FiniteTree::from_sorted(nodes, scale, if crossing > 0 { cap } else { None }), crossing))
}

/// Genealogy of one individual; `N`-normalised estimates multiply by `n`.
pub fn gw_tree<T: Real>(scheme: &GwScheme<T>, cap: Option<T>, rng: &mut Rng) -> Result<FiniteTree<T>> {
    grow_from_root(scheme, NodeKind::Root, 1, cap, &mut NoHook, rng)
}

/// Approximation of the forest under `P_r`: Poisson(`r n`) ancestors.
pub fn forest_under_pr<T: Real>(scheme: &GwScheme<T>, r: T, cap: Option<T>, rng: &mut Rng) -> Result<FiniteTree<T>> {
    let k = poisson((r * scheme.n).f64(), rng);
    grow_from_root(scheme, NodeKind::Infinite { delta: r }, k, cap, &mut NoHook, rng)
}

/// Generation sizes of the discrete population, without the genealogy.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile<T> {
    /// `sizes[g]` individuals live during `(g / gamma, (g + 1) / gamma]`.
    pub sizes: Vec<u64>,
    pub capped: bool,
    n: T,
    gamma: T,
}

impl<T: Real> Profile<T> {
    pub fn height(&self) -> T {
        T::count(self.sizes.len() as u64) / self.gamma
    }

    pub fn total_mass(&self) -> T {
        T::count(self.sizes.iter().sum()) / (self.n * self.gamma)
    }

    /// `Z_a`, the population mass alive at time `a > 0`.
    pub fn level_mass(&self, a: T) -> T {
        let g = (a * self.gamma).ceil().to_u64().unwrap_or(u64::MAX).saturating_sub(1) as usize;
        T::count(self.sizes.get(g).copied().unwrap_or(0)) / self.n
    }

    /// `int_0^a Z_s ds`.
    pub fn integrated_mass(&self, a: T) -> T {
        let mut acc = T::zero();
        for (g, &z) in self.sizes.iter().enumerate() {
            let lo = T::count(g as u64) / self.gamma;
            if lo >= a {
                break;
            }
            let hi = (T::count(g as u64 + 1) / self.gamma).min(a);
            acc = acc + T::count(z) * (hi - lo);
        }
        acc / self.n
    }
}

/// Population profile started from `ancestors` individuals, stopped after
/// the generation alive at `cap`.
pub fn profile<T: Real>(scheme: &GwScheme<T>, ancestors: u64, cap: Option<T>, rng: &mut Rng) -> Result<Profile<T>> {
    let max_gen = match cap {
        Some(h) => (h * scheme.gamma).ceil().to_u64().unwrap_or(u64::MAX),
        None => u64::MAX,
    };
    let mut sizes = Vec::new();
    let mut z = ancestors;
    let mut capped = false;
    let nf = scheme.n.f64();
    while z > 0 {
        if sizes.len() as u64 >= max_gen {
            capped = true;
            break;
        }
        sizes.push(z);
        if sizes.len() > 50_000_000 {
            return Err(Error::SizeLimit("profile exceeded 5e7 generations".into()));
        }
        let mut left = z;
        let mut mass_left = 1.0;
        let mut next = 0u64;
        let probs = [scheme.p_death, scheme.p_stay, scheme.p_binary];
        let last = 2 + scheme.p_jump.len();
        for cat in 0..=last {
            let p = if cat < 3 { probs[cat] } else { scheme.p_jump[cat - 3] };
            let count = if cat == last {
                std::mem::take(&mut left)
            } else {
                let k = binomial(left, (p / mass_left).min(1.0), rng);
                left -= k;
                mass_left -= p;
                k
            };
            if count == 0 {
                continue;
            }
            next += match cat {
                0 => 0,
                1 => count,
                2 => 2 * count,
                _ => {
                    let total = match scheme.mech.jumps()[cat - 3] {
                        Primitive::PointMass { z: size, .. } => count as f64 * size.f64(),
                        Primitive::GammaDensity { k, rho, .. } => Gamma::new(count as f64 * k.f64(), 1.0 / rho.f64())
                            .expect("valid gamma")
                            .sample(rng),
                    };
                    poisson(nf * total, rng)
                }
            };
        }
        z = next;
    }
    Ok(Profile { sizes, capped, n: scheme.n, gamma: scheme.gamma })
}

/// Exact total mass under `P_r` for `psi(l) = b l + c l^2`: inverse Gaussian
/// for `b > 0`, Levy for `b = 0`.
pub fn exact_sigma_quadratic<T: Real>(b: T, c: T, r: T, rng: &mut Rng) -> Result<T> {
    if !(c > T::zero() && b >= T::zero() && r > T::zero()) {
        return invalid("exact total mass needs b >= 0, c > 0 and r > 0");
    }
    let nu: f64 = StandardNormal.sample(rng);
    let y = T::lit(nu * nu);
    if b == T::zero() {
        return Ok(r * r / ((c + c) * y));
    }
    let mu = r / b;
    let shape = r * r / (c + c);
    let w = mu * y / (shape + shape);
    let x = mu / (T::one() + w + (w * w + w + w).sqrt());
    let u = T::lit(rng.random::<f64>());
    Ok(if u <= mu / (mu + x) { x } else { mu * mu / x })
}

/// Grafting event on the spine of the size-biased tree.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpineGraft<T> {
    /// One lineage branching off (quadratic part).
    Binary,
    /// A forest of mass `size` hanging from an infinite node.
    Jump { size: T },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpineEvent<T> {
    pub at: T,
    pub graft: SpineGraft<T>,
}

/// Poisson grafting points on `[0, h]`: binary grafts at rate `2 c n` and
/// jump grafts at rate `int l m(dl)` with size-biased sizes.
pub fn spine_events<T: Real>(scheme: &GwScheme<T>, h: T, rng: &mut Rng) -> Vec<SpineEvent<T>> {
    let mech = &scheme.mech;
    let hf = h.f64();
    let mut out = Vec::new();
    let binary_rate = (mech.c() + mech.c()) * scheme.n;
    for _ in 0..poisson(binary_rate.f64() * hf, rng) {
        out.push(SpineEvent { at: T::lit(rng.random::<f64>() * hf), graft: SpineGraft::Binary });
    }
    let weights: Vec<f64> = mech.jumps().iter().map(|p| p.first_moment().f64()).collect();
    let total: f64 = weights.iter().sum();
    for _ in 0..poisson(total * hf, rng) {
        let mut u = rng.random::<f64>() * total;
        let mut idx = weights.len() - 1;
        for (i, w) in weights.iter().enumerate() {
            if u < *w {
                idx = i;
                break;
            }
            u -= w;
        }
        let size = match mech.jumps()[idx] {
            Primitive::PointMass { z, .. } => z,
            Primitive::GammaDensity { k, rho, .. } => {
                T::lit(Gamma::new(k.f64() + 1.0, 1.0 / rho.f64()).expect("valid gamma").sample(rng))
            }
        };
        out.push(SpineEvent { at: T::lit(rng.random::<f64>() * hf), graft: SpineGraft::Jump { size } });
    }
    out.sort_by(|a, b| a.at.partial_cmp(&b.at).unwrap_or(std::cmp::Ordering::Equal));
    out
}

/// Tree along a spine `[0, tip]` with the given grafts, each grown up to
/// height `cap`. `expand[i] = false` leaves the graft's node childless.
/// Returns the tree and the spine node indices from the root upwards.
pub(crate) fn build_spine_tree<T: Real, H: EdgeHook<T>>(
    scheme: &GwScheme<T>,
    tip: T,
    events: &[SpineEvent<T>],
    expand: &[bool],
    cap: T,
    hook: &mut H,
    rng: &mut Rng,
) -> Result<(FiniteTree<T>, Vec<usize>)> {
    let mut nodes = vec![Node::root(NodeKind::Root)];
    let mut spine = vec![0usize];
    let mut capped = false;
    let mut last = T::zero();
    for (ev, &grow_it) in events.iter().zip(expand) {
        let id = nodes.len();
        let kind = match ev.graft {
            SpineGraft::Binary => NodeKind::Binary,
            SpineGraft::Jump { size } => NodeKind::Infinite { delta: size },
        };
        nodes.push(Node::child(*spine.last().unwrap_or(&0), ev.at - last, kind, T::zero()));
        spine.push(id);
        last = ev.at;
        if !grow_it {
            continue;
        }
        let ancestors = match ev.graft {
            SpineGraft::Binary => 1,
            SpineGraft::Jump { size } => scheme.litter(size, rng),
        };
        let stack = (0..ancestors).map(|_| Lineage { parent: id, base: ev.at, start: 0 }).collect();
        capped |= grow(scheme, &mut nodes, stack, Some(cap), hook, rng)? > 0;
    }
    if tip > last || events.is_empty() {
        let id = nodes.len();
        nodes.push(Node::child(*spine.last().unwrap_or(&0), tip - last, NodeKind::Leaf, T::zero()));
        spine.push(id);
    }
    let scale = T::one() / scheme.n;
    Ok((FiniteTree::from_sorted(nodes, scale, if capped { Some(cap) } else { None }), spine))
}

/// Discrete size-biased tree: a spine of length `h` with grafted
/// subtrees, all cut at height `h`.
pub fn infinite_crt<T: Real>(scheme: &GwScheme<T>, h: T, rng: &mut Rng) -> Result<(FiniteTree<T>, Vec<usize>)> {
    let events = spine_events(scheme, h, rng);
    let expand = vec![true; events.len()];
    let (mut tree, spine) = build_spine_tree(scheme, h, &events, &expand, h, &mut NoHook, rng)?;
    tree.set_cap(Some(h));
    Ok((tree, spine))
}

/// Tree observed below height `a` under a tilted law, with the likelihood
/// ratio turning tilted expectations into expectations for the original
/// mechanism.
#[derive(Debug, Clone)]
pub struct WeightedSample<T> {
    pub tree: FiniteTree<T>,
    pub weight: T,
    /// `Z_a`, the mass crossing the observation height.
    pub level: T,
}

/// Same as [`WeightedSample`] but keeping only generation sizes.
#[derive(Debug, Clone)]
pub struct WeightedProfile<T> {
    pub profile: Profile<T>,
    pub weight: T,
}

/// `exp(theta Z_a + psi(theta) int_0^a Z_s ds)`, the inverse of the
/// Girsanov martingale for a single tree (`Z_0 = 0`).
fn inverse_martingale<T: Real>(mech: &Mechanism<T>, theta: T, level: T, integral: T) -> T {
    (theta * level + mech.eval(theta) * integral).exp()
}

fn tilted_scheme<T: Real>(mech: &Mechanism<T>, theta: T, n: T) -> Result<GwScheme<T>> {
    let tilted = mech.conjugate(theta)?;
    if tilted.classify() == Criticality::Supercritical {
        return Err(Error::Precondition(format!("tilt {theta} leaves the mechanism supercritical")));
    }
    GwScheme::new(&tilted, n, None)
}

/// Samples `psi^theta(l) = psi(theta + l) - psi(theta)` below height `a`;
/// `N^psi[F] = n E[F weight]` for functionals of the tree below `a`.
pub fn tilted_window<T: Real>(mech: &Mechanism<T>, theta: T, n: T, a: T, rng: &mut Rng) -> Result<WeightedSample<T>> {
    let scheme = tilted_scheme(mech, theta, n)?;
    let (tree, crossing) = grow_counting(&scheme, NodeKind::Root, 1, Some(a), &mut NoHook, rng)?;
    let level = T::count(crossing) / n;
    let weight = inverse_martingale(mech, theta, level, tree.total_mass());
    Ok(WeightedSample { tree, weight, level })
}

/// Profile version of [`tilted_window`].
pub fn tilted_profile<T: Real>(mech: &Mechanism<T>, theta: T, n: T, a: T, rng: &mut Rng) -> Result<WeightedProfile<T>> {
    let scheme = tilted_scheme(mech, theta, n)?;
    let profile = profile(&scheme, 1, Some(a), rng)?;
    let weight = inverse_martingale(mech, theta, profile.level_mass(a), profile.integrated_mass(a));
    Ok(WeightedProfile { profile, weight })
}

/// Tilt by `eta`: the conjugate is subcritical and the weight is `exp(eta Z_a)`.
pub fn supercritical_window<T: Real>(mech: &Mechanism<T>, n: T, a: T, rng: &mut Rng) -> Result<WeightedSample<T>> {
    tilted_window(mech, mech.eta()?, n, a, rng)
}

/// Standard exponential variable.
pub(crate) fn exp1(rng: &mut Rng) -> f64 {
    Exp1.sample(rng)
}
