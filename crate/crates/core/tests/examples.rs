//! Worked examples for each module with hand-derived values.

use levy_prune::family::{AdmissibleFamily, Window};
use levy_prune::laws;
use levy_prune::mechanism::{Criticality, Mechanism, Primitive};
use levy_prune::numerics::integrate;
use levy_prune::prune::{generate_marks, MarkedSampler};
use levy_prune::rng::RngStreams;
use levy_prune::sampler::{infinite_crt, spine_events, tilted_window, GwScheme};
use levy_prune::tree::{AttachPoint, FiniteTree, Node, NodeKind};
use levy_prune::Error;

fn close(a: f64, b: f64, tol: f64) {
    assert!((a - b).abs() <= tol * b.abs().max(1.0), "{a} vs {b}");
}

fn quad(b: f64, c: f64) -> Mechanism<f64> {
    Mechanism::quadratic(b, c).unwrap()
}

fn drift() -> AdmissibleFamily<f64> {
    AdmissibleFamily::linear_drift(1.0, 1.0, Window::real_line()).unwrap()
}

/// `psi(l) = l^2 + (e^{-l} - 1 + l)`.
fn shift_base() -> Mechanism<f64> {
    Mechanism::new(0.0, 1.0, vec![Primitive::point(1.0, 1.0)]).unwrap()
}

fn shift() -> AdmissibleFamily<f64> {
    AdmissibleFamily::shift(shift_base(), Window::new(-1.0, true, 5.0).unwrap()).unwrap()
}

#[test]
fn mechanism_values() {
    assert_eq!(quad(0.0, 1.0).psi(2.0).unwrap(), 4.0);
    let atom = Mechanism::new(0.0, 0.0, vec![Primitive::point(1.0, 1.0)]).unwrap();
    close(atom.psi(1.0).unwrap(), (-1.0f64).exp(), 1e-15);
    assert_eq!(atom.psi(0.0).unwrap(), 0.0);
    assert!(atom.psi(f64::INFINITY).is_err());

    let m = quad(0.0, 1.0);
    assert_eq!((m.psi_d1(3.0).unwrap(), m.psi_d2(3.0).unwrap()), (6.0, 2.0));
    assert_eq!(quad(1.0, 1.0).psi_d1(0.0).unwrap(), 1.0);
    assert_eq!(atom.psi_d1(0.0).unwrap(), 0.0);
    close(atom.psi_d2(0.0).unwrap(), 1.0, 1e-15);
    let h = 1e-5;
    let fd = (atom.psi_d1(h).unwrap() - atom.psi_d1(0.0).unwrap()) / h;
    close(fd, 1.0, 1e-4);
}

#[test]
fn mechanism_roots_and_heights() {
    assert_eq!(quad(1.0, 1.0).eta().unwrap(), 0.0);
    close(quad(-1.0, 1.0).eta().unwrap(), 1.0, 1e-12);
    assert!(Mechanism::new(-1.0, 0.0, vec![Primitive::point(1.0, 1.0)]).unwrap().eta().is_err());

    close(quad(0.0, 1.0).psi_inverse(4.0).unwrap(), 2.0, 1e-12);
    close(quad(1.0, 1.0).psi_inverse(2.0).unwrap(), 1.0, 1e-12);
    close(quad(-1.0, 1.0).psi_inverse(0.0).unwrap(), 1.0, 1e-12);
    assert!(quad(0.0, 1.0).psi_inverse(-1.0).is_err());

    close(quad(0.0, 1.0).v_of(0.5).unwrap(), 2.0, 1e-10);
    close(quad(1.0, 1.0).v_of(2f64.ln()).unwrap(), 1.0, 1e-10);
    let far = quad(-1.0, 1.0).v_of(30.0).unwrap();
    assert!(far > 1.0 && far - 1.0 < 1e-9);
    assert!(quad(0.0, 1.0).v_of(0.0).is_err());

    close(quad(0.0, 1.0).u_of(1.0, 1.0).unwrap(), 0.5, 1e-10);
    assert_eq!(shift_base().u_of(0.0, 0.7).unwrap(), 0.7);
    let m = quad(0.0, 1.0);
    close(m.u_of(1.0, m.u_of(1.0, 1.0).unwrap()).unwrap(), 1.0 / 3.0, 1e-10);
    close(m.u_of(2.0, 1.0).unwrap(), 1.0 / 3.0, 1e-10);
    let sup = quad(-1.0, 1.0);
    assert_eq!(sup.u_of(1.0, 1.0).unwrap(), 1.0);
    assert!(m.u_of(1.0, -1.0).is_err());
}

#[test]
fn mechanism_classes() {
    assert_eq!(quad(0.0, 1.0).classify(), Criticality::Critical);
    assert!(quad(0.0, 1.0).grey_check().unwrap());
    assert_eq!(quad(-2.0, 1.0).classify(), Criticality::Supercritical);
    assert!(quad(-2.0, 1.0).grey_check().unwrap());
    let no_grey = Mechanism::new(1.0, 0.0, vec![Primitive::point(1.0, 1.0)]).unwrap();
    assert!(!no_grey.grey_check().unwrap());
    // psi grows linearly, so the reciprocal integral grows like ln(l) / 2.
    let tail = integrate(|l| 1.0 / no_grey.psi(l).unwrap(), 1.0, 1e6, 1e-10, 1e-10).unwrap().value;
    assert!(tail > 0.45 * 1e6f64.ln());
}

#[test]
fn family_members() {
    let f = drift();
    let m1 = f.psi_at(1.0).unwrap();
    assert_eq!((m1.b(), m1.c(), m1.jumps().len()), (1.0, 1.0, 0));
    let s = shift();
    assert_eq!(s.psi_at(-1.0).unwrap(), shift_base().conjugate(-1.0).unwrap());
    let m = s.psi_at(1.0).unwrap();
    close(m.b(), 2.0 + 1.0 - (-1.0f64).exp(), 1e-14);
    assert_eq!(m.jumps().len(), 1);
    close(m.jumps()[0].weight(), (-1.0f64).exp(), 1e-15);
    assert!(f.psi_at(f64::NAN).is_err());
    let bounded = AdmissibleFamily::linear_drift(1.0, 1.0, Window::new(-1.0, true, 1.0).unwrap()).unwrap();
    assert!(bounded.psi_at(2.0).is_err());
}

#[test]
fn family_kernel() {
    let f = drift();
    assert_eq!(f.zeta(0.3, 3.0).unwrap(), 3.0);
    assert_eq!(shift().zeta(0.7, 0.0).unwrap(), 0.0);
    close(shift().zeta(0.0, 1.0).unwrap(), 2.0 + 1.0 - (-1.0f64).exp(), 1e-14);

    let s = shift();
    close(s.mz_primitive(0.0, 2f64.ln(), 0).unwrap(), 0.5, 1e-15);
    assert_eq!(s.mz_primitive(0.4, 0.4, 0).unwrap(), 1.0);
    close(
        s.mz_primitive(0.0, 2.0, 0).unwrap(),
        s.mz_primitive(0.0, 1.0, 0).unwrap() * s.mz_primitive(1.0, 2.0, 0).unwrap(),
        1e-15,
    );
    let trunc = AdmissibleFamily::truncation(
        1.0,
        0.0,
        1.0,
        2.0,
        1.0,
        &[Primitive::point(1.0, 1.0)],
        Window::new(0.0, true, 3.0).unwrap(),
    )
    .unwrap();
    assert!(matches!(trunc.mz_primitive(1.0, 2.0, 0), Err(Error::DegeneratePrimitive(_))));

    let p = f.prune_parameters(0.0, 3.0).unwrap();
    assert_eq!(p.alpha, 3.0);
    assert_eq!(p.node_mark_probability(1.0).unwrap(), 0.0);
    let p = s.prune_parameters(0.5, 0.5).unwrap();
    assert_eq!((p.alpha, p.node_mark_probability(1.0).unwrap()), (0.0, 0.0));
    let p = s.prune_parameters(0.0, 2f64.ln()).unwrap();
    close(p.node_mark_probability(1.0).unwrap(), 0.5, 1e-15);
}

#[test]
fn family_ascension() {
    let f = drift();
    close(f.eta_at(-1.0).unwrap(), 1.0, 1e-12);
    assert_eq!(f.eta_at(0.5).unwrap(), 0.0);
    let (t_inf, reachable) = f.t_infinity();
    assert!(t_inf == f64::NEG_INFINITY && !reachable);
    close(f.psi_at(-50.0).unwrap().psi_inverse(0.0).unwrap(), 50.0, 1e-12);

    close(f.qbar(-1.0).unwrap().unwrap(), 1.0, 1e-12);
    assert!(f.qbar(-1e-9).unwrap().unwrap().abs() < 1e-8);
    let s = shift();
    let q = -0.6;
    let eta = s.eta_at(q).unwrap();
    close(s.qbar(q).unwrap().unwrap(), q + eta, 1e-10);

    let r = f.ascension_rates(-1.0).unwrap();
    close(r.gamma, 1.0, 1e-12);
    close(r.u_density, 1.0, 1e-12);
    let h = 1e-6;
    let dq = (f.qbar(-1.0 + h).unwrap().unwrap() - f.qbar(-1.0 - h).unwrap().unwrap()) / (2.0 * h);
    close(dq, -r.gamma / f.zeta_d1(1.0, 0.0).unwrap(), 1e-6);
}

#[test]
fn family_admissibility() {
    let times = [-1.0, -0.5, 0.0, 0.5, 1.0];
    let lambdas = [0.1, 1.0, 10.0];
    let sizes = [0.5, 1.0, 2.0];
    assert!(drift().check_admissibility(&times, &lambdas, &sizes).unwrap().passed());
    assert!(shift().check_admissibility(&times, &lambdas, &sizes).unwrap().passed());
    let rising = AdmissibleFamily::truncation(
        1.0,
        0.0,
        1.0,
        1.0,
        -1.0,
        &[Primitive::point(0.5, 1.0), Primitive::point(2.0, 1.0)],
        Window::new(0.0, true, 2.0).unwrap(),
    )
    .unwrap();
    let report = rising.check_admissibility(&[0.0, 0.5, 1.0, 2.0], &lambdas, &[0.5, 2.0]).unwrap();
    assert!(!report.passed());
    assert!(AdmissibleFamily::linear_drift(-1.0, 1.0, Window::real_line()).is_err());
}

fn spine(lengths: &[f64]) -> FiniteTree<f64> {
    let mut nodes = vec![Node::root(NodeKind::Root)];
    for (i, &l) in lengths.iter().enumerate() {
        let kind = if i + 1 == lengths.len() { NodeKind::Leaf } else { NodeKind::Binary };
        nodes.push(Node::child(i, l, kind, 0.0));
    }
    FiniteTree::from_nodes(nodes, 1.0).unwrap().0
}

fn atom(mass: f64) -> FiniteTree<f64> {
    let mut nodes = vec![Node::root(NodeKind::Root), Node::child(0, 0.5, NodeKind::Leaf, 0.0)];
    nodes[1].atom = mass;
    FiniteTree::from_nodes(nodes, 1.0).unwrap().0
}

#[test]
fn tree_operations() {
    let base = spine(&[1.0, 1.0, 1.0]);
    let same = base.graft(vec![]).unwrap();
    assert_eq!(same.nodes(), base.nodes());

    let grafted = base
        .graft(vec![
            (AttachPoint::Node(1), atom(1.0)),
            (AttachPoint::Node(2), atom(2.0)),
            (AttachPoint::Node(3), atom(3.0)),
        ])
        .unwrap();
    assert_eq!(grafted.total_mass(), 6.0);

    let mut tall = vec![Node::root(NodeKind::Root), Node::child(0, 2.5, NodeKind::Leaf, 0.0)];
    tall[1].atom = 1.0;
    let tall = FiniteTree::from_nodes(tall, 1.0).unwrap().0;
    let g = base.graft(vec![(AttachPoint::Edge { node: 2, offset: 0.4 }, tall)]).unwrap();
    close(g.height(), 1.4 + 2.5, 1e-15);
    assert!(base.graft(vec![(AttachPoint::Node(99), atom(1.0))]).is_err());

    let (r, _) = base.restrict_below(5.0);
    assert_eq!(r.height(), base.height());
    assert_eq!(r.node_count(), base.node_count());
    let (r, _) = base.restrict_below(0.0);
    assert_eq!(r.node_count(), 1);
    let (r, _) = spine(&[2.0]).restrict_below(1.0);
    assert_eq!((r.node_count(), r.height()), (2, 1.0));
}

#[test]
fn tree_levels() {
    let mut nodes = vec![
        Node::root(NodeKind::Root),
        Node::child(0, 1.0, NodeKind::Binary, 0.5),
        Node::child(1, 1.0, NodeKind::Leaf, 0.5),
        Node::child(1, 2.0, NodeKind::Leaf, 0.5),
    ];
    nodes[2].atom = 0.25;
    let t = FiniteTree::from_nodes(nodes, 0.5).unwrap().0;
    assert_eq!(t.level_mass(0.5), 0.5);
    assert_eq!(t.level_mass(1.5), 1.0);
    assert_eq!(t.level_mass(2.5), 0.5);
    assert_eq!(t.level_mass(3.5), 0.0);
    // int_0^inf Z_a da equals the edge mass.
    let integral: f64 = (0..4000).map(|i| t.level_mass((i as f64 + 0.5) / 1000.0) / 1000.0).sum();
    close(integral, t.total_mass() - 0.25, 1e-12);

    let comps = t.subtrees_above(1.0);
    assert_eq!(comps.len(), 2);
    let masses: f64 = comps.iter().map(|c| c.tree.total_mass()).sum();
    close(masses + 0.5, t.total_mass(), 1e-15);
}

#[test]
fn sampler_schemes() {
    let s = GwScheme::new(&quad(0.0, 1.0), 100.0, None).unwrap();
    let pmf = s.offspring_pmf(8);
    let mean: f64 = pmf.iter().enumerate().map(|(k, p)| k as f64 * p).sum();
    let fact2: f64 = pmf.iter().enumerate().map(|(k, p)| (k * k.saturating_sub(1)) as f64 * p).sum();
    close(mean, 1.0, 1e-14);
    close(fact2, 2.0 * 100.0 / s.rate(), 1e-14);
    assert!(GwScheme::new(&quad(-1.0, 1.0), 100.0, None).is_err());
    let sub = GwScheme::new(&quad(1.0, 1.0), 100.0, None).unwrap();
    close(sub.mean_offspring(), 1.0 - 1.0 / sub.rate(), 1e-14);
}

#[test]
fn sampler_offspring_moments_by_simulation() {
    let s = GwScheme::new(&quad(0.0, 1.0), 50.0, None).unwrap();
    let mut rng = RngStreams::new(21, 0).replicate(0);
    let reps = 1_000_000;
    let pmf = s.offspring_pmf(3);
    let (mut sum, mut sum2) = (0.0, 0.0);
    use rand::Rng as _;
    for _ in 0..reps {
        let u: f64 = rng.random();
        let k = pmf.iter().scan(0.0, |acc, p| {
            *acc += p;
            Some(*acc)
        });
        let k = k.take_while(|&c| u >= c).count() as f64;
        sum += k;
        sum2 += k * (k - 1.0);
    }
    let var = 2.0 * 50.0 / s.rate();
    let mean = sum / reps as f64;
    assert!((mean - 1.0).abs() < 3.0 * (var / reps as f64).sqrt());
    assert!((sum2 / reps as f64 - var).abs() < 0.01);
}

#[test]
fn sampler_spine() {
    let base = Mechanism::new(0.0, 1.0, vec![Primitive::point(1.0, 1.0)]).unwrap();
    let scheme = GwScheme::new(&base, 100.0, None).unwrap();
    let mut rng = RngStreams::new(22, 0).replicate(0);
    let reps = 4000;
    let h = 2.0;
    let mut jumps = 0usize;
    for _ in 0..reps {
        jumps += spine_events(&scheme, h, &mut rng)
            .iter()
            .filter(|e| matches!(e.graft, levy_prune::sampler::SpineGraft::Jump { .. }))
            .count();
    }
    let mean = jumps as f64 / reps as f64;
    assert!((mean - h).abs() < 3.0 * (h / reps as f64).sqrt(), "{mean}");
    let (t, sp) = infinite_crt(&scheme, 0.0, &mut rng).unwrap();
    assert!(t.height() == 0.0 && sp.len() <= 2);
}

#[test]
fn sampler_weighted_windows() {
    let mut rng = RngStreams::new(23, 0).replicate(0);
    let w = tilted_window(&quad(1.0, 1.0), 0.0, 100.0, 1.0, &mut rng).unwrap();
    assert_eq!(w.weight, 1.0);
    let w = levy_prune::sampler::supercritical_window(&quad(0.5, 1.0), 100.0, 1.0, &mut rng).unwrap();
    assert_eq!(w.weight, 1.0);
}

#[test]
fn prune_examples() {
    let f = drift();
    let t = spine(&[2.0]);
    let mut rng = RngStreams::new(24, 0).replicate(0);
    let m = generate_marks(&t, &f, 0.0, 3.0, &mut rng).unwrap();
    assert_eq!(m.pruned_at(0.0).unwrap().nodes(), t.nodes());
    assert!(generate_marks(&t, &f, 1.0, 0.5, &mut rng).is_err());

    let sampler = MarkedSampler::new(&f, 30.0, 0.0, 2.0).unwrap();
    for _ in 0..50 {
        let m = sampler.tree(0.0, Some(2.0), &mut rng).unwrap();
        let full = m.tree().total_mass();
        let path = m.sigma_path(&[0.0, 2.0]).unwrap();
        close(path[0].mass, full, 1e-12);
        assert!(path[1].mass <= path[0].mass);
    }
}

#[test]
fn law_examples_through_the_crate_root() {
    close(laws::sigma_laplace(&quad(1.0, 1.0), 1.0).unwrap(), 0.618034, 1e-6);
    close(laws::size_bias_identity(&drift(), 1.0, 2.0).unwrap(), 1.0 / 3.0, 1e-12);
}
