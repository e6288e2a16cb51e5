//! Reference fixed-point solver and brute-force solution verifier.
//!
//! The oracle iterates the stopping equations Gauss-Seidel style from
//! `f = +inf` and shares no code with the event solver beyond the crossing
//! formula.

use super::{crossing, germs, LilypondSolution};
use crate::error::{invalid, Error, Result};
use crate::geom::MarkedConfiguration;

/// Largest configuration the quadratic oracle accepts.
pub const ORACLE_CAP: usize = 1000;

pub fn oracle_solve(phi: &MarkedConfiguration) -> Result<LilypondSolution> {
    let g = germs(phi)?;
    let n = g.base.len();
    if n == 0 {
        return Err(invalid!("the lilypond model needs a non-empty configuration"));
    }
    if n > ORACLE_CAP {
        return Err(Error::ResourceCap(format!("oracle limited to {ORACLE_CAP} germs, got {n}")));
    }
    let eps = phi.tolerance();
    super::solve::screen_axis_alignment(&g, eps)?;

    // cands[x] = (t, u, y) with u < t, sorted by t.
    let mut cands: Vec<Vec<(f64, f64, usize)>> = vec![Vec::new(); n];
    for x in 0..n {
        for y in 0..n {
            if x == y {
                continue;
            }
            if let Some((t, u)) = crossing(g.base[x], g.dir[x], g.base[y], g.dir[y]) {
                if (t - u).abs() <= eps * t {
                    return Err(Error::NotGeneric(format!(
                        "germs {} and {} reach their crossing simultaneously",
                        phi.point(x).id,
                        phi.point(y).id
                    )));
                }
                if u < t {
                    cands[x].push((t, u, y));
                }
            }
        }
        cands[x].sort_by(|a, b| a.0.total_cmp(&b.0));
    }

    let mut f = vec![f64::INFINITY; n];
    let mut stopper: Vec<Option<usize>> = vec![None; n];
    let cap = 4 * n + 10;
    let mut converged = false;
    for _ in 0..cap {
        let mut changed = false;
        for x in 0..n {
            let mut best = (f64::INFINITY, None);
            for &(t, u, y) in &cands[x] {
                let fy = f[y];
                if fy.is_finite() && (fy - u).abs() <= eps * fy.max(u) {
                    return Err(Error::NotGeneric(format!(
                        "germ {} stops exactly where germ {} arrives",
                        phi.point(y).id,
                        phi.point(x).id
                    )));
                }
                if u < fy {
                    best = (t, Some(y));
                    break;
                }
            }
            if best.1 != stopper[x] || best.0.to_bits() != f[x].to_bits() {
                f[x] = best.0;
                stopper[x] = best.1;
                changed = true;
            }
        }
        if !changed {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergence(format!("fixed-point iteration still moving after {cap} passes")));
    }

    let tip = (0..n)
        .map(|x| {
            stopper[x].map(|y| {
                let a = g.dir[x].axis();
                let mut p = g.base[x];
                p[a] = g.base[y][a];
                p
            })
        })
        .collect();
    Ok(LilypondSolution { f, stopper, tip })
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct VerifyReport {
    /// Pairs of ids whose segments cross or overlap.
    pub hard_core: Vec<(u64, u64)>,
    /// Ids whose stopping data is inconsistent, with a reason.
    pub stopping: Vec<(u64, String)>,
}

impl VerifyReport {
    pub fn is_ok(&self) -> bool {
        self.hard_core.is_empty() && self.stopping.is_empty()
    }
}

/// Checks the hard-core and stopping properties of `sol` by brute force.
pub fn verify_report(phi: &MarkedConfiguration, sol: &LilypondSolution) -> Result<VerifyReport> {
    let g = germs(phi)?;
    let n = g.base.len();
    if sol.len() != n {
        return Err(invalid!("solution has {} entries for {} points", sol.len(), n));
    }
    let scale = g.base.iter().flat_map(|p| p.iter()).fold(0.0f64, |m, v| m.max(v.abs()));
    let tau = 1e-9 * (1.0 + scale);
    let id = |i: usize| phi.point(i).id;
    let mut rep = VerifyReport::default();

    for i in 0..n {
        for j in (i + 1)..n {
            let (ai, aj) = (g.dir[i].axis(), g.dir[j].axis());
            if ai != aj {
                let ti = g.dir[i].sign() * (g.base[j][ai] - g.base[i][ai]);
                let tj = g.dir[j].sign() * (g.base[i][aj] - g.base[j][aj]);
                if ti >= 0.0 && tj >= 0.0 && ti < sol.f[i] - tau && tj < sol.f[j] - tau {
                    rep.hard_core.push((id(i), id(j)));
                }
            } else {
                let lat = 1 - ai;
                if (g.base[i][lat] - g.base[j][lat]).abs() > tau {
                    continue;
                }
                let ext = |k: usize| {
                    let end = g.base[k][ai] + g.dir[k].sign() * sol.f[k];
                    (g.base[k][ai].min(end), g.base[k][ai].max(end))
                };
                let (li, hi) = ext(i);
                let (lj, hj) = ext(j);
                if li.max(lj) <= hi.min(hj) + tau {
                    rep.hard_core.push((id(i), id(j)));
                }
            }
        }
    }

    for i in 0..n {
        let fi = sol.f[i];
        match (fi.is_finite(), sol.stopper[i]) {
            (false, None) => {}
            (false, Some(_)) => rep.stopping.push((id(i), "infinite growth with a stopper".into())),
            (true, None) => rep.stopping.push((id(i), "finite growth without a stopper".into())),
            (true, Some(j)) => {
                if !(fi > 0.0) {
                    rep.stopping.push((id(i), format!("non-positive length {fi}")));
                    continue;
                }
                if j >= n || g.dir[j].axis() == g.dir[i].axis() {
                    rep.stopping.push((id(i), "stopper is not perpendicular".into()));
                    continue;
                }
                let ai = g.dir[i].axis();
                let aj = g.dir[j].axis();
                let mut tip = g.base[i];
                tip[ai] += g.dir[i].sign() * fi;
                if let Some(t) = sol.tip[i] {
                    if (t[0] - tip[0]).abs() > tau || (t[1] - tip[1]).abs() > tau {
                        rep.stopping.push((id(i), "stored tip disagrees with the length".into()));
                    }
                } else {
                    rep.stopping.push((id(i), "missing tip".into()));
                }
                if (tip[ai] - g.base[j][ai]).abs() > tau {
                    rep.stopping.push((id(i), "tip is off the stopper's line".into()));
                    continue;
                }
                let u = g.dir[j].sign() * (tip[aj] - g.base[j][aj]);
                if u < -tau {
                    rep.stopping.push((id(i), "tip lies behind the stopper's base".into()));
                } else if !(u < sol.f[j]) {
                    rep.stopping.push((id(i), "stopper's segment does not reach the tip".into()));
                } else if !(u < fi) {
                    rep.stopping.push((id(i), "stopper arrives after the germ".into()));
                }
            }
        }
    }
    Ok(rep)
}

pub fn verify_solution(phi: &MarkedConfiguration, sol: &LilypondSolution) -> bool {
    verify_report(phi, sol).map(|r| r.is_ok()).unwrap_or(false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::BoxRegion;
    use crate::lilypond::solve;
    use crate::ppgen::{sample_poisson, MarkLaw};

    #[test]
    fn oracle_agrees_with_event_solver() {
        for seed in 0..40u64 {
            let w = BoxRegion::centered(2, 8.0).unwrap();
            let phi = sample_poisson(&w, 1.5, &MarkLaw::Direction, seed).unwrap();
            if phi.is_empty() {
                continue;
            }
            let a = solve(&phi).unwrap();
            let b = oracle_solve(&phi).unwrap();
            assert_eq!(a, b, "seed {seed}");
            let rep = verify_report(&phi, &a).unwrap();
            assert!(rep.is_ok(), "seed {seed}: {rep:?}");
        }
    }

    #[test]
    fn verifier_catches_overlong_segments() {
        let w = BoxRegion::centered(2, 8.0).unwrap();
        let phi = sample_poisson(&w, 1.5, &MarkLaw::Direction, 3).unwrap();
        let mut sol = solve(&phi).unwrap();
        let i = (0..sol.len()).find(|&i| sol.is_finite(i)).unwrap();
        sol.f[i] += 0.5;
        assert!(!verify_solution(&phi, &sol));
    }
}
