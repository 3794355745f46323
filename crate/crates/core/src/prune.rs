//! Marks on trees and the decreasing family of pruned trees.
//!
//! Skeleton marks fall on edges as a Poisson process with intensity
//! `beta_theta d theta` times length; infinite nodes carry the first time
//! at which they are marked. `T_q` keeps the points whose ancestral line
//! carries no mark with time at most `q`.

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::family::AdmissibleFamily;
use crate::real::Real;
use crate::rng::Rng;
use crate::sampler::{
    build_spine_tree, exp1, grow_from_root, poisson, spine_events, EdgeHook, Expand, GwScheme, SpineEvent,
    SpineGraft,
};
use crate::tree::{FiniteTree, NodeKind};

/// A mark on the edge above `node`, `offset` from its lower end.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SkeletonMark<T> {
    pub node: usize,
    pub offset: T,
    pub theta: T,
}

/// Summary of `T_q`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrunedStats<T> {
    pub q: T,
    pub mass: T,
    pub height: T,
    pub nodes: usize,
}

/// A piece removed between the marking time and `q`: everything above the
/// first mark on some lineage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrunedComponent<T> {
    /// Node whose edge (or, for node marks, the node itself) carries the cut.
    pub node: usize,
    /// Distance from the root to the cut point.
    pub depth: T,
    pub height: T,
    pub mass: T,
    pub node_mark: bool,
}

#[derive(Debug, Clone)]
pub struct MarkedTree<T> {
    tree: FiniteTree<T>,
    t: T,
    t_max: T,
    valid_from: T,
    marks: Vec<SkeletonMark<T>>,
    start: Vec<usize>,
    node_mark: Vec<Option<T>>,
}

/// Per node of the base tree: `None` if removed, else the retained edge
/// length and whether the node lost its offspring.
type Retained<T> = Vec<Option<(T, bool)>>;

impl<T: Real> MarkedTree<T> {
    fn assemble(
        tree: FiniteTree<T>,
        t: T,
        t_max: T,
        valid_from: T,
        mut marks: Vec<SkeletonMark<T>>,
        node_marks: Vec<(usize, T)>,
    ) -> Self {
        let n = tree.node_count();
        marks.sort_by(|a, b| a.node.cmp(&b.node).then(a.offset.partial_cmp(&b.offset).unwrap_or(std::cmp::Ordering::Equal)));
        let mut start = vec![0usize; n + 1];
        for m in &marks {
            start[m.node + 1] += 1;
        }
        for v in 0..n {
            start[v + 1] += start[v];
        }
        let mut node_mark = vec![None; n];
        for (v, q) in node_marks {
            node_mark[v] = Some(q);
        }
        MarkedTree { tree, t, t_max, valid_from, marks, start, node_mark }
    }

    pub fn tree(&self) -> &FiniteTree<T> {
        &self.tree
    }

    /// Marking window `[t, t_max]`.
    pub fn window(&self) -> (T, T) {
        (self.t, self.t_max)
    }

    /// Smallest `q` for which the explored part of the tree suffices.
    pub fn valid_from(&self) -> T {
        self.valid_from
    }

    pub fn marks(&self) -> &[SkeletonMark<T>] {
        &self.marks
    }

    pub fn marks_on(&self, v: usize) -> &[SkeletonMark<T>] {
        &self.marks[self.start[v]..self.start[v + 1]]
    }

    /// First mark time of node `v`, if it is marked within the window.
    pub fn node_mark(&self, v: usize) -> Option<T> {
        self.node_mark[v]
    }

    fn check_q(&self, q: T) -> Result<()> {
        if q >= self.valid_from && q <= self.t_max {
            Ok(())
        } else {
            Err(Error::Domain(format!(
                "pruning time {q} outside [{}, {}]",
                self.valid_from, self.t_max
            )))
        }
    }

    /// Lowest offset on the edge above `v` of a mark with time at most `q`.
    fn cut_on(&self, v: usize, q: T) -> Option<T> {
        self.marks_on(v).iter().find(|m| m.theta <= q).map(|m| m.offset)
    }

    fn node_cut(&self, v: usize, q: T) -> bool {
        v != 0 && self.node_mark[v].is_some_and(|m| m <= q)
    }

    fn retained(&self, q: T) -> Retained<T> {
        let nodes = self.tree.nodes();
        let mut out: Retained<T> = vec![None; nodes.len()];
        out[0] = Some((T::zero(), false));
        for (v, node) in nodes.iter().enumerate().skip(1) {
            let Some(p) = node.parent else { continue };
            match out[p] {
                Some((_, false)) => {}
                _ => continue,
            }
            out[v] = Some(match self.cut_on(v, q) {
                Some(c) => (c, true),
                None => (node.length, self.node_cut(v, q)),
            });
        }
        out
    }

    /// The pruned tree `T_q`. Cut points and marked nodes become leaves.
    pub fn pruned_at(&self, q: T) -> Result<FiniteTree<T>> {
        self.check_q(q)?;
        let kept = self.retained(q);
        let mut map = vec![usize::MAX; kept.len()];
        let mut nodes = Vec::new();
        for (v, node) in self.tree.nodes().iter().enumerate() {
            let Some((len, closed)) = kept[v] else { continue };
            map[v] = nodes.len();
            let mut out = *node;
            out.parent = node.parent.map(|p| map[p]);
            out.length = len;
            if closed {
                if len < node.length {
                    out.atom = T::zero();
                }
                if v != 0 {
                    out.kind = NodeKind::Leaf;
                }
            }
            nodes.push(out);
        }
        Ok(FiniteTree::from_sorted(nodes, self.tree.scale(), self.tree.cap()))
    }

    /// Mass, height and node count of `T_q` without building it.
    pub fn stats(&self, q: T) -> Result<PrunedStats<T>> {
        self.check_q(q)?;
        let kept = self.retained(q);
        let nodes = self.tree.nodes();
        let mut depth = vec![T::zero(); nodes.len()];
        let (mut mass, mut height, mut count) = (nodes[0].atom, T::zero(), 1usize);
        for (v, node) in nodes.iter().enumerate().skip(1) {
            let Some((len, _)) = kept[v] else { continue };
            let d = depth[node.parent.unwrap_or(0)] + len;
            depth[v] = d;
            height = height.max(d);
            count += 1;
            mass = mass + node.density * len;
            if len == node.length {
                mass = mass + node.atom;
            }
        }
        Ok(PrunedStats { q, mass, height, nodes: count })
    }

    /// `(q, sigma_q, H_max(T_q))` along a grid.
    pub fn sigma_path(&self, q_grid: &[T]) -> Result<Vec<PrunedStats<T>>> {
        q_grid.iter().map(|&q| self.stats(q)).collect()
    }

    /// Largest grid time at which the pruned tree is still higher than `h`.
    pub fn exit_time(&self, h: T, q_grid: &[T]) -> Result<Option<T>> {
        let mut best = None;
        for s in self.sigma_path(q_grid)? {
            if s.height > h {
                best = Some(best.map_or(s.q, |b: T| b.max(s.q)));
            }
        }
        Ok(best)
    }

    /// Components removed when pruning from the start of the window to `q`.
    /// Needs the full tree, so the tree must be explored from `t`.
    pub fn pruned_components(&self, q: T) -> Result<Vec<PrunedComponent<T>>> {
        self.check_q(q)?;
        if self.valid_from > self.t {
            return Err(Error::Precondition("components need a fully explored tree".into()));
        }
        let nodes = self.tree.nodes();
        // Height and mass of the subtree above each node.
        let mut above = vec![T::zero(); nodes.len()];
        let mut mass_above = vec![T::zero(); nodes.len()];
        for (v, node) in nodes.iter().enumerate().rev() {
            mass_above[v] = mass_above[v] + node.atom;
            if let Some(p) = node.parent {
                above[p] = above[p].max(above[v] + node.length);
                mass_above[p] = mass_above[p] + mass_above[v] + node.density * node.length;
            }
        }
        let depths = self.tree.depths();
        let kept = self.retained(q);
        let mut out = Vec::new();
        for (v, node) in nodes.iter().enumerate().skip(1) {
            let Some((len, true)) = kept[v] else { continue };
            let parent_depth = depths[node.parent.unwrap_or(0)];
            if self.cut_on(v, q).is_some() {
                let rest = node.length - len;
                out.push(PrunedComponent {
                    node: v,
                    depth: parent_depth + len,
                    height: rest + above[v],
                    mass: node.density * rest + mass_above[v],
                    node_mark: false,
                });
            } else {
                out.push(PrunedComponent {
                    node: v,
                    depth: depths[v],
                    height: above[v],
                    mass: mass_above[v] - node.atom,
                    node_mark: true,
                });
            }
        }
        Ok(out)
    }
}

/// Draws marks for edges and infinite nodes. With `explore_from > t` it
/// also tells the grower to stop above marks with time at most
/// `explore_from`, since no `T_q` with `q >= explore_from` reaches there.
struct Marker<'a, T> {
    fam: &'a AdmissibleFamily<T>,
    t: T,
    t_max: T,
    alpha: T,
    explore_from: T,
    marks: Vec<SkeletonMark<T>>,
    node_marks: Vec<(usize, T)>,
}

impl<'a, T: Real> Marker<'a, T> {
    fn new(fam: &'a AdmissibleFamily<T>, t: T, t_max: T, explore_from: T) -> Result<Self> {
        if !(t <= explore_from && explore_from <= t_max) {
            return Err(Error::Domain(format!("need t <= explore_from <= t_max, got {t}, {explore_from}, {t_max}")));
        }
        let alpha = fam.alpha(t, t_max)?;
        Ok(Marker { fam, t, t_max, alpha, explore_from, marks: Vec::new(), node_marks: Vec::new() })
    }

    fn theta(&self, rng: &mut Rng) -> Result<T> {
        let u = T::lit(rng.random::<f64>());
        Ok(self.fam.alpha_inverse(self.t, u * self.alpha, self.t_max)?.min(self.t_max))
    }

    /// Marks on an edge; returns the lowest offset of a mark at or before
    /// `explore_from`. Marks above that offset are discarded.
    fn edge(&mut self, rng: &mut Rng, node: usize, length: T) -> Result<Option<T>> {
        let k = poisson((self.alpha * length).f64(), rng);
        let first = self.marks.len();
        let mut cut: Option<T> = None;
        for _ in 0..k {
            let offset = T::lit(rng.random::<f64>()) * length;
            let theta = self.theta(rng)?;
            if theta <= self.explore_from && cut.is_none_or(|c| offset < c) {
                cut = Some(offset);
            }
            self.marks.push(SkeletonMark { node, offset, theta });
        }
        if let Some(c) = cut {
            let mut i = first;
            while i < self.marks.len() {
                if self.marks[i].offset > c {
                    self.marks.swap_remove(i);
                } else {
                    i += 1;
                }
            }
        }
        Ok(cut)
    }

    fn node(&mut self, rng: &mut Rng, node: usize, delta: T) -> Result<Option<T>> {
        let e = T::lit(exp1(rng));
        let m = self.fam.first_node_mark(self.t, delta, e, self.t_max)?;
        if let Some(q) = m {
            self.node_marks.push((node, q));
        }
        Ok(m)
    }
}

impl<T: Real> EdgeHook<T> for Marker<'_, T> {
    fn edge(&mut self, rng: &mut Rng, node: usize, length: T, kind: NodeKind<T>) -> Result<Expand<T>> {
        if let Some(c) = Marker::edge(self, rng, node, length)? {
            return Ok(Expand::Cut(c));
        }
        if let NodeKind::Infinite { delta } = kind {
            if self.node(rng, node, delta)?.is_some_and(|q| q <= self.explore_from) {
                return Ok(Expand::Stop);
            }
        }
        Ok(Expand::Children)
    }
}

/// Marks an existing tree on `[t, t_max]`. The root is never marked and
/// binary nodes carry no node marks.
pub fn generate_marks<T: Real>(
    tree: &FiniteTree<T>,
    fam: &AdmissibleFamily<T>,
    t: T,
    t_max: T,
    rng: &mut Rng,
) -> Result<MarkedTree<T>> {
    let mut marker = Marker::new(fam, t, t_max, t)?;
    for (v, node) in tree.nodes().iter().enumerate().skip(1) {
        if node.length > T::zero() {
            marker.edge(rng, v, node.length)?;
        }
        if let NodeKind::Infinite { delta } = node.kind {
            marker.node(rng, v, delta)?;
        }
    }
    let Marker { marks, node_marks, .. } = marker;
    Ok(MarkedTree::assemble(tree.clone(), t, t_max, t, marks, node_marks))
}

/// Prunes `marked` to `theta`, marks the result afresh on `[theta, q]` and
/// prunes again at `q`.
pub fn two_step<T: Real>(
    marked: &MarkedTree<T>,
    fam: &AdmissibleFamily<T>,
    theta: T,
    q: T,
    rng: &mut Rng,
) -> Result<FiniteTree<T>> {
    let mid = marked.pruned_at(theta)?;
    generate_marks(&mid, fam, theta, q, rng)?.pruned_at(q)
}

/// Spine tree with marks; see [`MarkedSampler::crt`].
#[derive(Debug, Clone)]
pub struct MarkedCrt<T> {
    pub marked: MarkedTree<T>,
    /// Spine node indices from the root upwards.
    pub spine: Vec<usize>,
    pub height: T,
}

impl<T: Real> MarkedCrt<T> {
    /// Height at which the spine is cut in `T*_q`, or `None` if it survives
    /// up to the sampled height.
    pub fn spine_cut(&self, q: T) -> Result<Option<T>> {
        self.marked.check_q(q)?;
        let nodes = self.marked.tree.nodes();
        let mut depth = T::zero();
        for &v in &self.spine[1..] {
            if let Some(c) = self.marked.cut_on(v, q) {
                return Ok(Some(depth + c));
            }
            depth = depth + nodes[v].length;
            if self.marked.node_cut(v, q) {
                return Ok(Some(depth));
            }
        }
        Ok(None)
    }
}

struct SpinePlan<T> {
    events: Vec<SpineEvent<T>>,
    expand: Vec<bool>,
    node_marks: Vec<Option<T>>,
    /// `(height, time)` of the skeleton marks on the spine.
    marks: Vec<(T, T)>,
    tip: T,
}

/// Samples marked discrete trees for `psi_t` with marks on `[t, t_max]`.
#[derive(Debug, Clone)]
pub struct MarkedSampler<'a, T> {
    fam: &'a AdmissibleFamily<T>,
    scheme: GwScheme<T>,
    t: T,
    t_max: T,
}

impl<'a, T: Real> MarkedSampler<'a, T> {
    pub fn new(fam: &'a AdmissibleFamily<T>, n: T, t: T, t_max: T) -> Result<Self> {
        fam.alpha(t, t_max)?;
        let scheme = GwScheme::new(&fam.psi_at(t)?, n, None)?;
        Ok(MarkedSampler { fam, scheme, t, t_max })
    }

    pub fn scheme(&self) -> &GwScheme<T> {
        &self.scheme
    }

    /// One marked tree. Regions that are pruned for every `q >= explore_from`
    /// are never grown.
    pub fn tree(&self, explore_from: T, cap: Option<T>, rng: &mut Rng) -> Result<MarkedTree<T>> {
        let mut marker = Marker::new(self.fam, self.t, self.t_max, explore_from)?;
        let tree = grow_from_root(&self.scheme, NodeKind::Root, 1, cap, &mut marker, rng)?;
        let Marker { marks, node_marks, .. } = marker;
        Ok(MarkedTree::assemble(tree, self.t, self.t_max, explore_from, marks, node_marks))
    }

    /// Spine marks and grafting events of a size-biased tree, up to the
    /// first cut at or before `explore_from`.
    fn spine_plan(&self, marker: &Marker<'_, T>, explore_from: T, h: T, rng: &mut Rng) -> Result<SpinePlan<T>> {
        let k = poisson((marker.alpha * h).f64(), rng);
        let mut marks = Vec::with_capacity(k as usize);
        for _ in 0..k {
            let at = T::lit(rng.random::<f64>()) * h;
            marks.push((at, marker.theta(rng)?));
        }
        let mut tip = h;
        for &(at, theta) in &marks {
            if theta <= explore_from && at < tip {
                tip = at;
            }
        }
        // Grafts above the first skeleton cut are never used.
        let events = spine_events(&self.scheme, tip, rng);
        let mut plan = SpinePlan { events: Vec::new(), expand: Vec::new(), node_marks: Vec::new(), marks, tip };
        for ev in &events {
            if ev.at > plan.tip {
                break;
            }
            let nm = match ev.graft {
                SpineGraft::Jump { size } => {
                    let e = T::lit(exp1(rng));
                    self.fam.first_node_mark(self.t, size, e, self.t_max)?
                }
                SpineGraft::Binary => None,
            };
            let stop = nm.is_some_and(|q| q <= explore_from);
            plan.node_marks.push(nm);
            plan.events.push(*ev);
            plan.expand.push(!stop);
            if stop {
                plan.tip = ev.at;
                break;
            }
        }
        Ok(plan)
    }

    /// Height at which the spine of `T*_q` is cut, or `None` beyond `h`.
    /// Samples the spine only; the law matches [`MarkedCrt::spine_cut`].
    pub fn spine_cut(&self, q: T, h: T, rng: &mut Rng) -> Result<Option<T>> {
        let marker = Marker::new(self.fam, self.t, self.t_max, q)?;
        let plan = self.spine_plan(&marker, q, h, rng)?;
        Ok((plan.tip < h).then_some(plan.tip))
    }

    /// Marked size-biased tree: a spine of height `h` with grafts, the
    /// spine stopping at its first mark before `explore_from`.
    pub fn crt(&self, explore_from: T, h: T, rng: &mut Rng) -> Result<MarkedCrt<T>> {
        let mut marker = Marker::new(self.fam, self.t, self.t_max, explore_from)?;
        let SpinePlan { events: kept, expand, node_marks, marks: spine_marks, tip } =
            self.spine_plan(&marker, explore_from, h, rng)?;
        let (tree, spine) = build_spine_tree(&self.scheme, tip, &kept, &expand, h, &mut marker, rng)?;
        let Marker { mut marks, node_marks: mut all_node_marks, .. } = marker;
        let nodes = tree.nodes();
        let mut depth = vec![T::zero(); spine.len()];
        for i in 1..spine.len() {
            depth[i] = depth[i - 1] + nodes[spine[i]].length;
        }
        for (i, nm) in node_marks.into_iter().enumerate() {
            if let Some(q) = nm {
                all_node_marks.push((spine[i + 1], q));
            }
        }
        for (at, theta) in spine_marks {
            if at > tip {
                continue;
            }
            let i = depth.partition_point(|&d| d < at).clamp(1, spine.len() - 1);
            let offset = (at - depth[i - 1]).min(nodes[spine[i]].length);
            marks.push(SkeletonMark { node: spine[i], offset, theta });
        }
        let mut tree = tree;
        tree.set_cap(Some(h));
        Ok(MarkedCrt {
            marked: MarkedTree::assemble(tree, self.t, self.t_max, explore_from, marks, all_node_marks),
            spine,
            height: h,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::Window;
    use crate::mechanism::{Mechanism, Primitive};
    use crate::rng::RngStreams;
    use crate::tree::Node;

    fn path_tree(len: f64) -> FiniteTree<f64> {
        let nodes = vec![Node::root(NodeKind::Root), Node::child(0, len, NodeKind::Leaf, 1.0)];
        FiniteTree::from_nodes(nodes, 1.0).unwrap().0
    }

    #[test]
    fn single_mark_trace() {
        let tree = path_tree(2.0);
        let marks = vec![SkeletonMark { node: 1, offset: 1.0, theta: 1.0 }];
        let m = MarkedTree::assemble(tree, 0.0, 3.0, 0.0, marks, vec![]);
        assert_eq!(m.pruned_at(2.0).unwrap().height(), 1.0);
        assert_eq!(m.pruned_at(0.5).unwrap().height(), 2.0);
        assert_eq!(m.stats(2.0).unwrap().mass, 1.0);
        assert_eq!(m.pruned_at(0.0).unwrap().total_mass(), 2.0);
        let comps = m.pruned_components(2.0).unwrap();
        assert_eq!(comps.len(), 1);
        assert_eq!((comps[0].height, comps[0].mass), (1.0, 1.0));
    }

    #[test]
    fn mark_count_mean() {
        let fam = AdmissibleFamily::linear_drift(1.0, 1.0, Window::real_line()).unwrap();
        let tree = path_tree(2.0);
        let mut rng = RngStreams::new(3, 0).replicate(0);
        let reps = 20_000;
        let mut total = 0usize;
        for _ in 0..reps {
            total += generate_marks(&tree, &fam, 0.0, 3.0, &mut rng).unwrap().marks().len();
        }
        let mean = total as f64 / reps as f64;
        // Poisson(6): sd of the mean is sqrt(6 / reps).
        assert!((mean - 6.0).abs() < 4.0 * (6.0 / reps as f64).sqrt(), "{mean}");
        let empty = generate_marks(&tree, &fam, 1.0, 1.0, &mut rng).unwrap();
        assert!(empty.marks().is_empty());
    }

    #[test]
    fn node_mark_marginal() {
        let base = Mechanism::new(0.0, 1.0, vec![Primitive::point(1.0, 1.0)]).unwrap();
        let fam = AdmissibleFamily::shift(base, Window::new(-0.5, true, 5.0).unwrap()).unwrap();
        let nodes = vec![
            Node::root(NodeKind::Root),
            Node::child(0, 1.0, NodeKind::Infinite { delta: 1.0 }, 0.0),
            Node::child(1, 1.0, NodeKind::Leaf, 0.0),
        ];
        let tree = FiniteTree::from_nodes(nodes, 1.0).unwrap().0;
        let mut rng = RngStreams::new(5, 0).replicate(0);
        let q = 0.7_f64;
        let reps = 20_000;
        let mut unmarked = 0;
        for _ in 0..reps {
            let m = generate_marks(&tree, &fam, 0.0, 2.0, &mut rng).unwrap();
            if m.node_mark(1).is_none_or(|t| t > q) {
                unmarked += 1;
            }
        }
        let p = (-q).exp();
        let freq = unmarked as f64 / reps as f64;
        assert!((freq - p).abs() < 3.0 * (p * (1.0 - p) / reps as f64).sqrt(), "{freq} vs {p}");
    }

    #[test]
    fn pruning_is_nested_and_keeps_root() {
        let fam = AdmissibleFamily::linear_drift(1.0, 1.0, Window::real_line()).unwrap();
        let sampler = MarkedSampler::new(&fam, 50.0, 0.0, 2.0).unwrap();
        let mut rng = RngStreams::new(9, 0).replicate(0);
        let grid = [0.0_f64, 0.25, 0.5, 1.0, 1.5, 2.0];
        for _ in 0..200 {
            let m = sampler.tree(0.0, Some(3.0), &mut rng).unwrap();
            let path = m.sigma_path(&grid).unwrap();
            assert!((path[0].mass - m.tree().total_mass()).abs() < 1e-12_f64);
            for w in path.windows(2) {
                assert!(w[1].mass <= w[0].mass + 1e-15 && w[1].height <= w[0].height && w[1].nodes <= w[0].nodes);
            }
            let kept: Vec<Retained<f64>> = grid.iter().map(|&q| m.retained(q)).collect();
            for w in kept.windows(2) {
                for (a, b) in w[0].iter().zip(&w[1]) {
                    assert!(a.is_some() || b.is_none());
                }
                assert!(w[1][0].is_some());
            }
        }
    }

    #[test]
    fn lazy_growth_matches_full_growth() {
        let fam = AdmissibleFamily::linear_drift(1.0, 1.0, Window::real_line()).unwrap();
        let sampler = MarkedSampler::new(&fam, 40.0, 0.0, 1.0).unwrap();
        let mut rng = RngStreams::new(11, 0).replicate(0);
        let reps = 4000;
        let (mut lazy, mut full) = (Vec::new(), Vec::new());
        for _ in 0..reps {
            lazy.push(sampler.tree(1.0, None, &mut rng).unwrap().stats(1.0).unwrap().nodes as f64);
            full.push(sampler.tree(0.0, Some(4.0), &mut rng).unwrap().stats(1.0).unwrap().nodes as f64);
        }
        let mv = |x: &[f64]| {
            let m = x.iter().sum::<f64>() / x.len() as f64;
            let v = x.iter().map(|y| (y - m).powi(2)).sum::<f64>() / (x.len() - 1) as f64;
            (m, v / x.len() as f64)
        };
        let ((a, va), (b, vb)) = (mv(&lazy), mv(&full));
        assert!((a - b).abs() < 4.0 * (va + vb).sqrt(), "{a} vs {b}");
    }

    #[test]
    fn crt_spine_cut_is_exponential() {
        let fam = AdmissibleFamily::linear_drift(1.0, 1.0, Window::real_line()).unwrap();
        let sampler = MarkedSampler::new(&fam, 20.0, 0.0, 1.0).unwrap();
        let mut rng = RngStreams::new(13, 0).replicate(0);
        let reps = 3000;
        let mut sum = 0.0;
        for _ in 0..reps {
            let crt = sampler.crt(1.0, 20.0, &mut rng).unwrap();
            let xi: f64 = crt.spine_cut(1.0).unwrap().unwrap();
            let pruned = crt.marked.pruned_at(1.0).unwrap();
            assert!((pruned.height() - xi).abs() < 1e-9 || pruned.height() >= xi);
            sum += xi;
        }
        let mean = sum / reps as f64;
        assert!((mean - 1.0).abs() < 4.0 / (reps as f64).sqrt(), "{mean}");
    }

    #[test]
    fn spine_only_cut_matches_full_tree() {
        let base = Mechanism::new(0.0, 1.0, vec![Primitive::point(0.5, 2.0)]).unwrap();
        let fam = AdmissibleFamily::shift(base, Window::real_line()).unwrap();
        let sampler = MarkedSampler::new(&fam, 20.0, 0.0, 2.0).unwrap();
        let streams = RngStreams::new(14, 0);
        for k in 0..200 {
            let full = sampler.crt(1.0, 10.0, &mut streams.replicate(k)).unwrap().spine_cut(1.0).unwrap();
            let fast = sampler.spine_cut(1.0, 10.0, &mut streams.replicate(k)).unwrap();
            match (full, fast) {
                (Some(a), Some(b)) => assert!((a - b as f64).abs() <= 1e-12 * f64::max(a, 1.0), "replicate {k}: {a} vs {b}"),
                (a, b) => assert_eq!(a, b, "replicate {k}"),
            }
        }
    }

    #[test]
    fn two_step_rejects_bad_times() {
        let fam = AdmissibleFamily::linear_drift(1.0, 1.0, Window::real_line()).unwrap();
        let m = generate_marks(&path_tree(1.0), &fam, 0.0, 1.0, &mut RngStreams::new(1, 0).replicate(0)).unwrap();
        assert!(two_step(&m, &fam, 2.0, 3.0, &mut RngStreams::new(1, 0).replicate(1)).is_err());
        assert!(two_step(&m, &fam, 0.5, 1.0, &mut RngStreams::new(1, 0).replicate(1)).is_ok());
    }
}
