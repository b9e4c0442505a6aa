use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{EnsembleSpec, ModelKind};
use crate::dynamics::{is_captured, BarState, ParticleState, SystemState};
use crate::error::{Error, Result};
use crate::geometry::Table;
use crate::reduced::{g_factor, Branch, ReducedState};

const MAX_REJECTIONS: usize = 100_000;

/// Initial condition of one realization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Member {
    Billiard(SystemState),
    Reduced(ReducedState),
}

/// Independent stream for member `member` of run `run`.
pub fn member_rng(seed: u64, run: u32, member: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((run as u64) << 32) | (member & 0xffff_ffff));
    rng
}

/// Draws one initial condition: bar at energy `E_b0` with a uniform phase,
/// particle uniform over the chaotic part of the frozen billiard.
pub fn initial_member<R: Rng + ?Sized>(spec: &EnsembleSpec, table: &Table, rng: &mut R) -> Result<Member> {
    let (e_b, e_p) = spec.initial_energies(table.energy());
    let (k, mass) = (table.spring(), table.bar_mass());
    let amp = (2.0 * e_b / k).sqrt();
    let omega = (k / mass).sqrt();
    let drawn = rng.random::<f64>() * TAU;
    let phase = spec.bar_phase.unwrap_or(drawn);
    let bar = BarState {
        y_b: amp * phase.cos(),
        v_b: -amp * omega * phase.sin(),
        k,
        mass,
    };
    if spec.model == ModelKind::Reduced {
        let state = match table {
            Table::Rob(_) => ReducedState {
                y_b: bar.y_b,
                v_b: bar.v_b,
                t: 0.0,
                branch: Branch::Free,
                j: bar.energy(),
                hazard_left: None,
            },
            Table::Mushroom(g) => {
                let e_p = table.energy() - bar.energy();
                ReducedState {
                    y_b: bar.y_b,
                    v_b: bar.v_b,
                    t: 0.0,
                    branch: Branch::Chaotic,
                    j: e_p * g_factor(g, bar.y_b)?,
                    hazard_left: None,
                }
            }
        };
        return Ok(Member::Reduced(state));
    }
    let m = spec.m;
    let speed = (2.0 * e_p / m).sqrt();
    let particle = match table {
        Table::Rob(g) => {
            let x = rng.random::<f64>() * g.length;
            let y = (rng.random::<f64>() - 0.5) * g.height;
            let up = rng.random::<bool>();
            let right = rng.random::<bool>();
            ParticleState {
                x,
                y,
                u: if right { g.horizontal_speed } else { -g.horizontal_speed },
                v: if up { speed } else { -speed },
                m,
            }
        }
        Table::Mushroom(g) => {
            let h = g.cap_radius;
            let floor = g.floor(bar.y_b);
            let mut tries = 0;
            loop {
                tries += 1;
                if tries > MAX_REJECTIONS {
                    return Err(Error::InvalidSpec(
                        "could not place a chaotic particle in the billiard".into(),
                    ));
                }
                let x = (2.0 * rng.random::<f64>() - 1.0) * h;
                let y = floor + rng.random::<f64>() * (h - floor);
                let dir = rng.random::<f64>() * TAU;
                if !g.contains(x, y, bar.y_b, 0.0) {
                    continue;
                }
                let p = ParticleState {
                    x,
                    y,
                    u: speed * dir.cos(),
                    v: speed * dir.sin(),
                    m,
                };
                let region = crate::geometry::classify_region(table, (x, y), (p.u, p.v), bar.y_b)?;
                if !is_captured(g, &p, region, bar.y_b) {
                    break p;
                }
            }
        }
    };
    Ok(Member::Billiard(SystemState::new(table, particle, bar, 0.0)?))
}

/// Initial conditions of every member of run `run`.
pub fn build_initial_ensemble(spec: &EnsembleSpec, table: &Table, run: u32) -> Result<Vec<Member>> {
    spec.check_table(table)?;
    (0..spec.n_particles as u64)
        .map(|i| initial_member(spec, table, &mut member_rng(spec.seed, run, i)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{GeometryId, Region};

    fn spec(geometry: GeometryId, model: ModelKind) -> EnsembleSpec {
        EnsembleSpec {
            geometry,
            model,
            n_particles: 2000,
            m: 1e-3,
            ..EnsembleSpec::default()
        }
    }

    #[test]
    fn rob_members_share_particle_energy() {
        let table = GeometryId::Rob.default_table();
        let members = build_initial_ensemble(&spec(GeometryId::Rob, ModelKind::Billiard), &table, 0).unwrap();
        for m in members {
            let Member::Billiard(s) = m else { panic!() };
            assert!((s.particle_energy(&table) - 0.1).abs() < 1e-12);
            assert!((s.bar.energy() - 0.9).abs() < 1e-12);
        }
    }

    #[test]
    fn fermi_start_has_tiny_particle_energy() {
        let table = GeometryId::Mushroom.default_table();
        let sp = EnsembleSpec {
            fermi_exponent: Some(0.25),
            n_particles: 50,
            ..spec(GeometryId::Mushroom, ModelKind::Billiard)
        };
        for m in build_initial_ensemble(&sp, &table, 0).unwrap() {
            let Member::Billiard(s) = m else { panic!() };
            assert!((s.particle_energy(&table) - 1e-3f64.powf(0.5)).abs() < 1e-12);
        }
    }

    #[test]
    fn full_bar_energy_leaves_particles_at_rest() {
        let table = GeometryId::Rob.default_table();
        let sp = EnsembleSpec {
            e_b0: 1.0,
            n_particles: 20,
            ..spec(GeometryId::Rob, ModelKind::Billiard)
        };
        for m in build_initial_ensemble(&sp, &table, 0).unwrap() {
            let Member::Billiard(s) = m else { panic!() };
            assert_eq!(s.particle.v, 0.0);
        }
    }

    #[test]
    fn mushroom_members_start_chaotic_and_inside() {
        let table = GeometryId::Mushroom.default_table();
        let Table::Mushroom(g) = table else { unreachable!() };
        let members = build_initial_ensemble(&spec(GeometryId::Mushroom, ModelKind::Billiard), &table, 1).unwrap();
        let mut in_cap = 0;
        for m in &members {
            let Member::Billiard(s) = m else { panic!() };
            assert!(g.contains(s.particle.x, s.particle.y, s.bar.y_b, 1e-12));
            assert!(!is_captured(&g, &s.particle, s.region, s.bar.y_b));
            in_cap += (s.region == Region::Cap) as usize;
        }
        assert!(in_cap > 0 && in_cap < members.len());
    }

    #[test]
    fn bar_phase_is_uniform() {
        // Kolmogorov-Smirnov against the uniform law, 1% critical value
        let table = GeometryId::Rob.default_table();
        let sp = EnsembleSpec {
            n_particles: 10_000,
            ..spec(GeometryId::Rob, ModelKind::Reduced)
        };
        let omega = (table.spring() / table.bar_mass()).sqrt();
        let mut phases: Vec<f64> = build_initial_ensemble(&sp, &table, 0)
            .unwrap()
            .into_iter()
            .map(|m| {
                let Member::Reduced(s) = m else { panic!() };
                (-s.v_b / omega).atan2(s.y_b).rem_euclid(TAU) / TAU
            })
            .collect();
        phases.sort_by(f64::total_cmp);
        let n = phases.len() as f64;
        let d = phases
            .iter()
            .enumerate()
            .map(|(i, &p)| (p - i as f64 / n).abs().max(((i + 1) as f64 / n - p).abs()))
            .fold(0.0, f64::max);
        assert!(d < 1.628 / n.sqrt(), "KS statistic {d}");
    }

    #[test]
    fn streams_are_independent() {
        let a: u64 = member_rng(5, 0, 1).random();
        let b: u64 = member_rng(5, 0, 2).random();
        let c: u64 = member_rng(5, 1, 1).random();
        let a2: u64 = member_rng(5, 0, 1).random();
        assert_eq!(a, a2);
        assert!(a != b && a != c && b != c);
    }
}
