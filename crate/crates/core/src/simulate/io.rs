//! Snapshot export and scripted fixtures.
//!
//! A snapshot is written as two CSV tables under section markers:
//!
//! ```text
//! # horizon,10
//! # seed,42,replica,0
//! [particles]
//! id,parent,birth,death,type
//! 0,,0,12,0
//! 1,0,1,3,0
//! [mutations]
//! particle,time,new_type
//! 2,5.5,3
//! ```
//!
//! `parent` is empty for the root, `death` may be `inf`, `type` is the
//! type at birth and `[mutations]` lists Model II marks. Lines starting
//! with `#` other than the two headers are comments. Hand-written files in
//! this format replay fixed genealogies; type origins are recovered as the
//! earliest birth or mark creating each type.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::simulate::tree::{MutationEvent, Particle, TreeSnapshot};

pub fn write_snapshot_csv(snapshot: &TreeSnapshot, mut out: impl Write) -> Result<()> {
    writeln!(out, "# horizon,{}", snapshot.horizon)?;
    writeln!(out, "# seed,{},replica,{}", snapshot.seed, snapshot.replica)?;
    writeln!(out, "[particles]")?;
    writeln!(out, "id,parent,birth,death,type")?;
    for p in &snapshot.particles {
        let parent = p.parent.map(|m| m.to_string()).unwrap_or_default();
        writeln!(out, "{},{},{},{},{}", p.id, parent, p.birth_time, p.death_time, p.type_at_birth)?;
    }
    writeln!(out, "[mutations]")?;
    writeln!(out, "particle,time,new_type")?;
    for e in &snapshot.mutation_events {
        writeln!(out, "{},{},{}", e.particle, e.time, e.new_type)?;
    }
    Ok(())
}

#[derive(PartialEq)]
enum Section {
    Preamble,
    Particles,
    Mutations,
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn field<T: std::str::FromStr>(s: &str, line: usize, what: &str) -> Result<T> {
    s.trim()
        .parse()
        .map_err(|_| parse_err(line, format!("bad {what}: {s:?}")))
}

fn real(s: &str, line: usize, what: &str) -> Result<f64> {
    match s.trim() {
        "inf" | "+inf" | "Infinity" => Ok(f64::INFINITY),
        other => field(other, line, what),
    }
}

pub fn read_snapshot_csv(reader: impl BufRead) -> Result<TreeSnapshot> {
    let mut horizon = None;
    let (mut seed, mut replica) = (0, 0);
    let mut section = Section::Preamble;
    let mut particles: Vec<Particle> = Vec::new();
    let mut mutation_events = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let n = idx + 1;
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            let cols: Vec<&str> = comment.split(',').map(str::trim).collect();
            match cols.as_slice() {
                ["horizon", t] => horizon = Some(real(t, n, "horizon")?),
                ["seed", s, "replica", k] => {
                    seed = field(s, n, "seed")?;
                    replica = field(k, n, "replica")?;
                }
                _ => {}
            }
            continue;
        }
        match line {
            "[particles]" => {
                section = Section::Particles;
                continue;
            }
            "[mutations]" => {
                section = Section::Mutations;
                continue;
            }
            "id,parent,birth,death,type" | "particle,time,new_type" => continue,
            _ => {}
        }
        let cols: Vec<&str> = line.split(',').collect();
        match section {
            Section::Preamble => return Err(parse_err(n, "data before a section marker")),
            Section::Particles => {
                let [id, parent, birth, death, ty] = cols.as_slice() else {
                    return Err(parse_err(n, "expected id,parent,birth,death,type"));
                };
                let id: usize = field(id, n, "id")?;
                if id != particles.len() {
                    return Err(parse_err(n, "particle ids must be dense and in order"));
                }
                let parent = match parent.trim() {
                    "" => None,
                    m => Some(field::<usize>(m, n, "parent")?),
                };
                particles.push(Particle {
                    id,
                    parent,
                    birth_time: real(birth, n, "birth")?,
                    death_time: real(death, n, "death")?,
                    type_at_birth: field(ty, n, "type")?,
                });
            }
            Section::Mutations => {
                let [particle, time, new_type] = cols.as_slice() else {
                    return Err(parse_err(n, "expected particle,time,new_type"));
                };
                mutation_events.push(MutationEvent {
                    particle: field(particle, n, "particle")?,
                    time: real(time, n, "time")?,
                    new_type: field(new_type, n, "new_type")?,
                });
            }
        }
    }
    let horizon = horizon.ok_or_else(|| parse_err(1, "missing `# horizon,<t>` header"))?;
    if particles.is_empty() {
        return Err(parse_err(1, "no particles"));
    }
    for e in &mutation_events {
        if e.particle >= particles.len() {
            return Err(parse_err(0, format!("mark on unknown particle {}", e.particle)));
        }
    }
    mutation_events.sort_by(|x: &MutationEvent, y| x.time.total_cmp(&y.time));

    let n_types = particles
        .iter()
        .map(|p| p.type_at_birth)
        .chain(mutation_events.iter().map(|e| e.new_type))
        .max()
        .unwrap_or(0) as usize
        + 1;
    let mut type_origins = vec![f64::INFINITY; n_types];
    type_origins[0] = 0.0;
    for p in &particles {
        let o = &mut type_origins[p.type_at_birth as usize];
        *o = o.min(p.birth_time);
    }
    for e in &mutation_events {
        let o = &mut type_origins[e.new_type as usize];
        *o = o.min(e.time);
    }
    let alive_ids = particles.iter().filter(|p| p.is_alive_at(horizon)).map(|p| p.id).collect();
    Ok(TreeSnapshot {
        horizon,
        particles,
        mutation_events,
        type_origins,
        alive_ids,
        seed,
        replica,
    })
}
