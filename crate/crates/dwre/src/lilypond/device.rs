//! The stopping device: tiny four-cycles placed just ahead of every germ
//! that would otherwise run through the box, and checks of what adding them
//! changes.

use std::collections::{BTreeMap, BTreeSet};

use super::cycle::{is_cycle, make_cycle};
use super::events::{event_a7, event_a8};
use super::{LilypondSolution, Pt, Segment};
use crate::error::{Error, Result};
use crate::geom::{BoxRegion, LatticeSite, MarkedConfiguration, MarkedPoint, Position};
use crate::rng::derive_seed;

/// Like `solve`, but an empty configuration has the empty solution.
fn solve(phi: &MarkedConfiguration) -> Result<LilypondSolution> {
    if phi.is_empty() {
        return Ok(LilypondSolution { f: Vec::new(), stopper: Vec::new(), tip: Vec::new() });
    }
    super::solve(phi)
}

/// Ids in a boundary set, with the subset whose segment is unbounded in the
/// sample (those memberships are only as good as the window).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BoundarySet {
    pub ids: BTreeSet<u64>,
    pub censored: BTreeSet<u64>,
}

/// Points outside `Q_s(s z)` whose segment meets it.
pub fn boundary_in_star(phi: &MarkedConfiguration, sol: &LilypondSolution, z: &LatticeSite, s: f64) -> Result<BoundarySet> {
    let b = BoxRegion::site(z, s)?;
    let mut out = BoundarySet::default();
    for (i, p) in phi.points().iter().enumerate() {
        if b.contains(&p.position) || !Segment::of(phi, sol, i).meets_box(&b) {
            continue;
        }
        out.ids.insert(p.id);
        if !sol.is_finite(i) {
            out.censored.insert(p.id);
        }
    }
    Ok(out)
}

/// Points outside `Q_s(s z)` whose tip lies inside.
pub fn boundary_in_tip(phi: &MarkedConfiguration, sol: &LilypondSolution, z: &LatticeSite, s: f64) -> Result<BTreeSet<u64>> {
    let b = BoxRegion::site(z, s)?;
    Ok(phi
        .points()
        .iter()
        .enumerate()
        .filter(|(i, p)| !b.contains(&p.position) && sol.tip[*i].is_some_and(|t| b.contains_xy(t)))
        .map(|(_, p)| p.id)
        .collect())
}

/// Points inside `Q_s(s z)` whose tip lies outside; unbounded segments count
/// as leaving.
pub fn boundary_out(phi: &MarkedConfiguration, sol: &LilypondSolution, z: &LatticeSite, s: f64) -> Result<BoundarySet> {
    let b = BoxRegion::site(z, s)?;
    let mut out = BoundarySet::default();
    for (i, p) in phi.points().iter().enumerate() {
        if !b.contains(&p.position) {
            continue;
        }
        match sol.tip[i] {
            Some(t) if b.contains_xy(t) => {}
            Some(_) => {
                out.ids.insert(p.id);
            }
            None => {
                out.ids.insert(p.id);
                out.censored.insert(p.id);
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DevicePolicy {
    /// Require the external stabilization and separation events.
    #[default]
    RequireGood,
    /// Require separation only.
    SeparationOnly,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeviceOptions {
    pub policy: DevicePolicy,
    pub seed: u64,
    /// Offset of a cycle ahead of its germ, in units of `s^-4`.
    pub offset: f64,
    /// First id given to device points; defaults past the largest id of `phi1`.
    pub first_id: Option<u64>,
}

impl Default for DeviceOptions {
    fn default() -> Self {
        DeviceOptions { policy: DevicePolicy::RequireGood, seed: 0, offset: 0.375, first_id: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SiteKind {
    /// Ahead of a germ inside the box that does not leave it.
    Interior,
    /// Just inside the entry point of a germ entering the box.
    Entrant,
    /// Near the lower-left corner; present in every device.
    Corner,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeviceSite {
    pub center: Pt,
    pub kind: SiteKind,
    /// The germ the cycle is meant to stop.
    pub source: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Device {
    /// Device points, windowed to the site box.
    pub psi: MarkedConfiguration,
    pub sites: Vec<DeviceSite>,
    /// Point ids of each cycle, in cycle order, aligned with `sites`.
    pub cycles: Vec<[u64; 4]>,
    pub site: LatticeSite,
    pub s: f64,
    /// Cycle scale `s^-4 / 16`.
    pub cell: f64,
}

/// Centres of the device cycles for `Q_s(o)`, from the solved sample.
pub fn device_sites(phi: &MarkedConfiguration, sol: &LilypondSolution, s: f64, offset: f64) -> Result<Vec<DeviceSite>> {
    let o = LatticeSite::origin(2);
    let b = BoxRegion::site(&o, s)?;
    let delta = s.powi(-4);
    let out = boundary_out(phi, sol, &o, s)?;
    let entrants = boundary_in_tip(phi, sol, &o, s)?;
    let mut sites = Vec::new();
    for (i, p) in phi.points().iter().enumerate() {
        let v = p.mark.direction().expect("lilypond germ").vector();
        let push = |base: Pt| [base[0] + offset * delta * v[0], base[1] + offset * delta * v[1]];
        if b.contains(&p.position) && !out.ids.contains(&p.id) {
            sites.push(DeviceSite { center: push(p.xy()), kind: SiteKind::Interior, source: Some(p.id) });
        } else if entrants.contains(&p.id) {
            let entry = Segment::of(phi, sol, i).entry_point(&b);
            sites.push(DeviceSite { center: push(entry), kind: SiteKind::Entrant, source: Some(p.id) });
        }
    }
    let c = -s / 2.0 + offset * delta;
    sites.push(DeviceSite { center: [c, c], kind: SiteKind::Corner, source: None });
    Ok(sites)
}

/// Builds the stopping device for site `z` (with `phi1` given in global
/// coordinates), placing one cycle of scale `s^-4 / 16` per device site.
pub fn gen_device(phi1: &MarkedConfiguration, z: &LatticeSite, s: f64, opts: &DeviceOptions) -> Result<Device> {
    if phi1.dim() != 2 {
        return Err(Error::Invalid("the stopping device lives in the plane".into()));
    }
    let shift: Vec<f64> = z.0.iter().map(|&k| -(k as f64) * s).collect();
    let shift = Position::new(&shift)?;
    let local = phi1.translate(&shift)?;
    let q3 = BoxRegion::centered(2, 3.0 * s)?;
    let near = local.restrict(&q3);
    let ok = match opts.policy {
        DevicePolicy::RequireGood => event_a7(&near, s) && event_a8(&near, s),
        DevicePolicy::SeparationOnly => event_a8(&near, s),
    };
    if !ok {
        return Err(Error::Precondition(format!("site {z:?} does not satisfy the device events ({:?})", opts.policy)));
    }
    let sol = solve(&local)?;
    let sites = device_sites(&local, &sol, s, opts.offset)?;

    let cell = s.powi(-4) / 16.0;
    let home = BoxRegion::centered(2, s)?;
    // Cells must be pairwise disjoint and inside the box.
    let mut order: Vec<usize> = (0..sites.len()).collect();
    order.sort_by(|&a, &b| sites[a].center[0].total_cmp(&sites[b].center[0]));
    for (k, &a) in order.iter().enumerate() {
        let ca = sites[a].center;
        let cb = BoxRegion::new(Position::xy(ca[0], ca[1]), cell)?;
        if !(0..2).all(|k| cb.lo(k) >= home.lo(k) && cb.hi(k) <= home.hi(k)) {
            return Err(Error::Precondition(format!("device cell at {ca:?} leaves the site box")));
        }
        for &b in &order[k + 1..] {
            let cbb = sites[b].center;
            if cbb[0] - ca[0] >= cell {
                break;
            }
            if (cbb[1] - ca[1]).abs() < cell {
                return Err(Error::Precondition(format!("device cells at {ca:?} and {cbb:?} overlap")));
            }
        }
    }

    let mut next_id = opts.first_id.unwrap_or_else(|| phi1.points().iter().map(|p| p.id + 1).max().unwrap_or(0));
    let mut pts: Vec<MarkedPoint> = Vec::with_capacity(4 * sites.len());
    let mut cycles = Vec::with_capacity(sites.len());
    for (k, site) in sites.iter().enumerate() {
        let zeta = Position::xy(site.center[0] - shift.coords()[0], site.center[1] - shift.coords()[1]);
        let c = make_cycle(&zeta, cell, derive_seed(opts.seed, k as u64)).with_ids(next_id);
        cycles.push([next_id, next_id + 1, next_id + 2, next_id + 3]);
        next_id += 4;
        pts.extend(c.points);
    }
    let sites = sites
        .into_iter()
        .map(|d| DeviceSite { center: [d.center[0] - shift.coords()[0], d.center[1] - shift.coords()[1]], ..d })
        .collect();
    let psi = MarkedConfiguration::with_tolerance(pts, BoxRegion::site(z, s)?, phi1.tolerance())?;
    Ok(Device { psi, sites, cycles, site: z.clone(), s, cell })
}

/// Whether `psi_local` (site coordinates, inside `Q_s(o)`) is exactly one
/// `(zeta, s^-4/16)`-cycle per device site of `phi1_local`, and nothing else.
pub fn is_device_shaped(phi1_local: &MarkedConfiguration, psi_local: &MarkedConfiguration, s: f64) -> Result<bool> {
    let sol = solve(phi1_local)?;
    let cell = s.powi(-4) / 16.0;
    let sites = device_sites(phi1_local, &sol, s, 0.375)?;
    let mut used = 0usize;
    for site in &sites {
        let b = BoxRegion::new(Position::xy(site.center[0], site.center[1]), cell)?;
        let inside: Vec<MarkedPoint> = psi_local.points().iter().filter(|p| b.contains(&p.position)).cloned().collect();
        if !is_cycle(&inside, &b.center, cell) {
            return Ok(false);
        }
        used += inside.len();
    }
    Ok(used == psi_local.len())
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct UsReport {
    /// Device points stopped outside their own cycle or outside the box.
    pub device_violations: Vec<u64>,
    /// Sample points neither caught by the device nor left alone.
    pub sample_violations: Vec<u64>,
    /// Sites whose entering set changed.
    pub in_changed: Vec<LatticeSite>,
    /// Sites whose leaving set changed.
    pub out_changed: Vec<LatticeSite>,
    pub sites_checked: usize,
    /// Sample points caught by the device.
    pub caught: usize,
}

impl UsReport {
    pub fn passed(&self) -> bool {
        self.device_violations.is_empty()
            && self.sample_violations.is_empty()
            && self.in_changed.is_empty()
            && self.out_changed.is_empty()
    }
}

/// Checks the uniform stopping property on one instance: `phi1` is the
/// sample, `device` sits in its site box and `others` holds devices of
/// other sites (possibly empty). Boundary invariance is checked for every
/// site box inside the sample window.
pub fn check_us(phi1: &MarkedConfiguration, device: &Device, others: &MarkedConfiguration, s: f64) -> Result<UsReport> {
    let window = phi1.window().clone();
    let before = phi1.union(others, window.clone())?;
    let after = before.union(&device.psi, window.clone())?;
    let sol1 = solve(phi1)?;
    let sol_before = solve(&before)?;
    let sol_after = solve(&after)?;
    let home = BoxRegion::site(&device.site, s)?;
    let mut rep = UsReport::default();

    let cycle_of: BTreeMap<u64, usize> =
        device.cycles.iter().enumerate().flat_map(|(k, c)| c.iter().map(move |&id| (id, k))).collect();
    let stopper_id = |i: usize| sol_after.stopper_id(&after, i);
    for (i, p) in after.points().iter().enumerate() {
        let tip_home = sol_after.tip[i].is_some_and(|t| home.contains_xy(t));
        if let Some(&k) = cycle_of.get(&p.id) {
            let own = stopper_id(i).and_then(|y| cycle_of.get(&y)) == Some(&k);
            if !(own && tip_home) {
                rep.device_violations.push(p.id);
            }
        }
    }

    let in_before = boundary_in_tip(&before, &sol_before, &device.site, s)?;
    for p in phi1.points() {
        let ia = after.index_of(p.id).expect("sample point in union");
        let ib = before.index_of(p.id).expect("sample point in union");
        let new = sol_after.stopper_id(&after, ia);
        let caught = new.is_some_and(|y| cycle_of.contains_key(&y)) && sol_after.tip[ia].is_some_and(|t| home.contains_xy(t));
        let untouched = new == sol_before.stopper_id(&before, ib) && !in_before.contains(&p.id);
        if caught {
            rep.caught += 1;
        } else if !untouched {
            rep.sample_violations.push(p.id);
        }
    }

    // Site boxes contained in the window.
    let reach = (window.side / s).ceil() as i64 + 1;
    let c = window.center.coords();
    for z in crate::geom::sites_within(2, reach) {
        let z = LatticeSite::new(&[z.0[0] + (c[0] / s).round() as i64, z.0[1] + (c[1] / s).round() as i64]);
        let b = BoxRegion::site(&z, s)?;
        if !(0..2).all(|k| b.lo(k) >= window.lo(k) && b.hi(k) <= window.hi(k)) {
            continue;
        }
        rep.sites_checked += 1;
        if boundary_in_tip(phi1, &sol1, &z, s)? != boundary_in_tip(&after, &sol_after, &z, s)? {
            rep.in_changed.push(z.clone());
        }
        let out1 = boundary_out(phi1, &sol1, &z, s)?.ids;
        let out2 = boundary_out(&after, &sol_after, &z, s)?.ids;
        if out1 != out2 {
            rep.out_changed.push(z.clone());
        }
    }
    Ok(rep)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RestrictedReport {
    /// Points near the box whose stopping neighbour differs.
    pub descendant_mismatches: Vec<u64>,
    /// Whether "every segment meeting the box ends in it" holds for both or neither.
    pub in_equivalence: bool,
    pub out_equal: bool,
}

impl RestrictedReport {
    pub fn passed(&self) -> bool {
        self.descendant_mismatches.is_empty() && self.in_equivalence && self.out_equal
    }
}

fn restricted_key(phi: &MarkedConfiguration, star: &BoundarySet, b: &BoxRegion) -> BTreeMap<u64, MarkedPoint> {
    phi.points()
        .iter()
        .filter(|p| b.contains(&p.position) || star.ids.contains(&p.id))
        .map(|p| (p.id, p.clone()))
        .collect()
}

/// Compares two configurations that agree inside `Q_s(o)` and on the
/// segments reaching into it.
pub fn compare_restricted(phi: &MarkedConfiguration, phi2: &MarkedConfiguration, s: f64) -> Result<RestrictedReport> {
    let o = LatticeSite::origin(2);
    let b = BoxRegion::site(&o, s)?;
    let sol = solve(phi)?;
    let sol2 = solve(phi2)?;
    let star = boundary_in_star(phi, &sol, &o, s)?;
    let star2 = boundary_in_star(phi2, &sol2, &o, s)?;
    let key = restricted_key(phi, &star, &b);
    if key != restricted_key(phi2, &star2, &b) {
        return Err(Error::Precondition("the configurations differ inside the box or on its entering segments".into()));
    }
    let mut rep = RestrictedReport::default();
    for &id in key.keys() {
        let i = phi.index_of(id).expect("key point");
        let j = phi2.index_of(id).expect("key point");
        let touches = sol.tip[i].is_some_and(|t| b.contains_xy(t)) || sol2.tip[j].is_some_and(|t| b.contains_xy(t));
        if touches && sol.stopper_id(phi, i) != sol2.stopper_id(phi2, j) {
            rep.descendant_mismatches.push(id);
        }
    }
    let tip1 = boundary_in_tip(phi, &sol, &o, s)?;
    let tip2 = boundary_in_tip(phi2, &sol2, &o, s)?;
    rep.in_equivalence = (star.ids == tip1) == (star2.ids == tip2);
    rep.out_equal = boundary_out(phi, &sol, &o, s)?.ids == boundary_out(phi2, &sol2, &o, s)?.ids;
    Ok(rep)
}

/// Drops points until every coordinate, together with `±s/2`, is at least
/// `s^-4` from every other on each axis.
pub fn separate_greedy(phi: &MarkedConfiguration, s: f64) -> MarkedConfiguration {
    let sep = s.powi(-4);
    let mut keep: BTreeSet<u64> = phi.points().iter().map(|p| p.id).collect();
    for k in 0..phi.dim() {
        // (value, id) with `None` for the boundary sentinels.
        let mut v: Vec<(f64, Option<u64>)> =
            phi.points().iter().filter(|p| keep.contains(&p.id)).map(|p| (p.position.coords()[k], Some(p.id))).collect();
        v.push((-s / 2.0, None));
        v.push((s / 2.0, None));
        v.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.is_some().cmp(&b.1.is_some())));
        let mut last: Option<(f64, Option<u64>)> = None;
        for &(x, id) in &v {
            match last {
                Some((l, lid)) if x - l < sep => {
                    // Keep the sentinel; otherwise drop the later point.
                    if let Some(id) = id {
                        keep.remove(&id);
                    } else if let Some(lid) = lid {
                        keep.remove(&lid);
                        last = Some((x, id));
                    }
                }
                _ => last = Some((x, id)),
            }
        }
    }
    phi.filter(|p| keep.contains(&p.id))
}
