use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use anyhow::anyhow;
use fewbody_core::graf::{cluster_function, graf_region_with_value, von_zeipel_series, GrafParams};
use fewbody_core::kinmodel::{derive_seed, run_with_spec, verify_proposition, CollisionEvent, ModelTrace};
use fewbody_core::mass::kinetic_energy;
use fewbody_core::nbody::episodes::timeline_episodes;
use fewbody_core::nbody::poincare::hyperplane_roots;
use fewbody_core::nbody::{detect_episodes, integrate, poincare_membership, PoincareSurfaceSpec, Scenario};
use fewbody_core::nbody::{Trajectory, TrajectoryRecord};
use fewbody_core::partitions::{enumerate_partitions, messenger_tuples};
use fewbody_core::{MassSystem, MessengerTuple};
use serde::Serialize;
use serde_json::json;

use crate::cli::{AnalyzeArgs, AnalyzeCommand, Cli, Command, KinCommand, KinRunArgs, KinVerifyArgs, NbodyCommand, NbodyRunArgs, PartitionsCommand};
use crate::config::Config;
use crate::error::{CliError, CliResult};
use crate::io::{file_digest, read_jsonl, write_csv, write_json, write_jsonl};
use crate::manifest::{self, config_digest, RunManifest, MANIFEST_FILE};

/// What a successful command reports. `pass = false` means a verification
/// found a violation.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub pass: bool,
    pub lines: Vec<String>,
}

struct Run {
    out_dir: PathBuf,
    started: Instant,
    started_at: u64,
}

struct Record<'a> {
    command: &'a str,
    digest: String,
    inputs: BTreeMap<String, String>,
    seeds: Vec<u64>,
    artifacts: Vec<PathBuf>,
    pass: bool,
    summary: serde_json::Value,
}

impl Run {
    fn new(out_dir: PathBuf) -> Self {
        let started_at = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map_or(0, |d| d.as_secs());
        Run {
            out_dir,
            started: Instant::now(),
            started_at,
        }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }

    fn finish(&self, r: Record<'_>) -> CliResult<()> {
        let m = RunManifest {
            command: r.command.to_string(),
            config_digest: r.digest,
            inputs: r.inputs,
            seeds: r.seeds,
            artifacts: r.artifacts.iter().map(|p| p.display().to_string()).collect(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            started_at: self.started_at,
            wall_clock_s: self.started.elapsed().as_secs_f64(),
            pass: r.pass,
            summary: r.summary,
        };
        manifest::append(&self.path(MANIFEST_FILE), &m)
    }
}

pub fn execute(cli: Cli) -> CliResult<Outcome> {
    let run = Run::new(cli.out_dir);
    match cli.command {
        Command::Kin(KinCommand::Run(a)) => kin_run(&run, a),
        Command::Kin(KinCommand::Verify(a)) => kin_verify(&run, a),
        Command::Nbody(NbodyCommand::Run(a)) => nbody_run(&run, a),
        Command::Analyze(a) => analyze(&run, a),
        Command::Partitions(p) => partitions(p),
    }
}

fn kin_run(run: &Run, args: KinRunArgs) -> CliResult<Outcome> {
    let mut config = Config::load(&args.config)?;
    let section = config.kin_mut()?;
    if let Some(s) = args.seed {
        section.seed = s;
    }
    if let Some(k) = args.k {
        section.collisions = k;
    }
    if args.runs == 0 {
        return Err(CliError::input(anyhow!("--runs must be at least 1")));
    }
    if args.runs > 1 && args.output.is_some() {
        return Err(CliError::input(anyhow!("--output names a single trace; batches write one file per seed")));
    }
    let section = config.kin()?.clone();
    let seeds: Vec<u64> = if args.runs == 1 {
        vec![section.seed]
    } else {
        (0..args.runs as u64).map(|r| derive_seed(section.seed, r)).collect()
    };
    let configs = seeds
        .iter()
        .map(|&s| section.kin_config(s))
        .collect::<CliResult<Vec<_>>>()?;

    let jobs = args
        .jobs
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
        .clamp(1, configs.len());
    let slots: Vec<Mutex<Option<Result<ModelTrace, fewbody_core::Error>>>> =
        configs.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    std::thread::scope(|s| {
        for _ in 0..jobs {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= configs.len() {
                    break;
                }
                let r = run_with_spec(&configs[i], &section.policy);
                *slots[i].lock().expect("result slot") = Some(r);
            });
        }
    });

    let mut artifacts = Vec::new();
    let mut lines = Vec::new();
    for (slot, seed) in slots.into_iter().zip(&seeds) {
        let trace = slot
            .into_inner()
            .expect("result slot")
            .expect("every run finished")
            .map_err(|e| CliError::runtime(e).context(format!("run with seed {seed}")))?;
        let path = match &args.output {
            Some(p) => p.clone(),
            None => run.path(&format!("kin_trace_s{seed}.jsonl")),
        };
        write_jsonl(&path, &trace.events)?;
        lines.push(format!("seed {seed}: {} collisions -> {}", trace.events.len(), path.display()));
        artifacts.push(path);
    }
    run.finish(Record {
        command: "kin run",
        digest: config_digest(&config)?,
        inputs: BTreeMap::new(),
        seeds: seeds.clone(),
        artifacts,
        pass: true,
        summary: json!({ "runs": seeds.len(), "collisions": section.collisions }),
    })?;
    Ok(Outcome { pass: true, lines })
}

fn kin_verify(run: &Run, args: KinVerifyArgs) -> CliResult<Outcome> {
    let events: Vec<CollisionEvent> = read_jsonl(&args.trace)?;
    let report = verify_proposition(&events)
        .map_err(|e| CliError::input(e).context(format!("cannot verify {}", args.trace.display())))?;
    let path = args
        .output
        .unwrap_or_else(|| run.path(&format!("{}.report.json", stem(&args.trace))));
    write_json(&path, &report)?;
    let clauses = [
        ("clause1", &report.clause1),
        ("clause1b", &report.clause1b),
        ("clause2", &report.clause2),
        ("clause3", &report.clause3),
        ("clause4", &report.clause4),
        ("clause5", &report.clause5),
    ];
    let mut lines: Vec<String> = clauses
        .iter()
        .map(|(name, c)| {
            let verdict = if c.pass { "PASS" } else { "FAIL" };
            let first = c.failures.first().map(|f| format!(" ({f})")).unwrap_or_default();
            format!("{name} {verdict} margin {:.3e}{first}", c.margin)
        })
        .collect();
    lines.push(format!("report -> {}", path.display()));
    let mut inputs = BTreeMap::new();
    inputs.insert("trace".to_string(), file_digest(&args.trace)?);
    run.finish(Record {
        command: "kin verify",
        digest: config_digest(&events)?,
        inputs,
        seeds: Vec::new(),
        artifacts: vec![path],
        pass: report.all_pass,
        summary: json!({
            "events": report.events,
            "clauses": clauses.iter().map(|(n, c)| (n.to_string(), c.pass)).collect::<BTreeMap<_, _>>(),
        }),
    })?;
    Ok(Outcome {
        pass: report.all_pass,
        lines,
    })
}

fn relative_drift(values: impl Iterator<Item = f64>, reference: f64) -> f64 {
    let scale = reference.abs().max(f64::MIN_POSITIVE);
    values.map(|v| (v - reference).abs() / scale).fold(0.0, f64::max)
}

fn nbody_run(run: &Run, args: NbodyRunArgs) -> CliResult<Outcome> {
    let config = Config::load(&args.config)?;
    let scenario = config.scenario()?;
    let traj = integrate(&scenario)?;
    let path = args.output.unwrap_or_else(|| run.path("trajectory.jsonl"));
    write_jsonl(&path, &traj.records)?;
    let (first, last) = (traj.first(), traj.last());
    let drift = relative_drift(traj.records.iter().map(|r| r.energy), first.energy);
    let summary = json!({
        "stop": traj.stop,
        "records": traj.records.len(),
        "t_final": last.t,
        "energy": first.energy,
        "energy_drift": drift,
    });
    run.finish(Record {
        command: "nbody run",
        digest: config_digest(&config)?,
        inputs: BTreeMap::new(),
        seeds: Vec::new(),
        artifacts: vec![path.clone()],
        pass: true,
        summary,
    })?;
    Ok(Outcome {
        pass: true,
        lines: vec![
            format!("stop {:?} at t = {} after {} records", traj.stop, last.t, traj.records.len() - 1),
            format!("relative energy drift {drift:.3e}"),
            format!("trajectory -> {}", path.display()),
        ],
    })
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map_or_else(|| "out".to_string(), |s| s.to_string_lossy().into_owned())
}

/// Inputs shared by the analyses.
struct Analysis {
    config: Config,
    system: MassSystem,
    trajectory: Trajectory,
    graf: GrafParams,
    m: Vec<u32>,
    ell: f64,
    tuple: Option<MessengerTuple>,
}

impl Analysis {
    fn load(args: &AnalyzeArgs) -> CliResult<Self> {
        let mut config = Config::load(&args.config)?;
        let system = config.system()?;
        let potential = config.potential(&system)?;
        let mut graf = config.graf.unwrap_or_default();
        if let Some(d) = args.delta {
            graf.delta = d;
        }
        if let Some(e) = args.epsilon {
            graf.epsilon = e;
        }
        graf.validate()?;
        config.graf = Some(graf);
        let mut poincare = config.poincare();
        if !args.m.is_empty() {
            poincare.m = args.m.clone();
        }
        if let Some(l) = args.ell {
            poincare.ell = l;
        }
        if let Some(t) = &args.tuple {
            let tuple: MessengerTuple = serde_json::from_str(t)
                .map_err(|e| CliError::input(anyhow!("invalid --tuple {t}: {e}")))?;
            poincare.tuple = Some(tuple);
        }
        if let Some(t) = &poincare.tuple {
            if t.n() != system.n() {
                return Err(CliError::input(anyhow!("tuple does not partition the {} particles", system.n())));
            }
        }
        config.poincare = Some(poincare.clone());
        let records: Vec<TrajectoryRecord> = read_jsonl(&args.trajectory)?;
        let trajectory = Trajectory::from_records(system.clone(), potential, records)
            .map_err(|e| CliError::input(e).context(format!("invalid trajectory {}", args.trajectory.display())))?;
        Ok(Analysis {
            config,
            system,
            trajectory,
            graf,
            m: poincare.m,
            ell: poincare.ell,
            tuple: poincare.tuple,
        })
    }

    /// Records with `t > 0`, as the scaled analyses require.
    fn positive(&self) -> CliResult<Trajectory> {
        let p = self.trajectory.after(0.0);
        if p.records.len() < 2 {
            return Err(CliError::runtime(anyhow!("analysis needs at least two records at t > 0")));
        }
        Ok(p)
    }

    fn energy(&self) -> Option<f64> {
        let first = self.trajectory.first().state();
        fewbody_core::nbody::energy(&self.system, &self.trajectory.potential, &first).ok()
    }
}

struct Report {
    json: serde_json::Value,
    header: Vec<String>,
    rows: Vec<Vec<f64>>,
    lines: Vec<String>,
}

fn analyze(run: &Run, cmd: AnalyzeCommand) -> CliResult<Outcome> {
    let args = cmd.args();
    let a = Analysis::load(args)?;
    let report = match &cmd {
        AnalyzeCommand::Graf(_) => analyze_graf(&a),
        AnalyzeCommand::Episodes(_) => analyze_episodes(&a),
        AnalyzeCommand::Poincare(_) => analyze_poincare(&a),
        AnalyzeCommand::Vonzeipel(_) => analyze_vonzeipel(&a),
    }?;
    let base = format!("{}.{}", stem(&args.trajectory), cmd.name());
    let json_path = run.path(&format!("{base}.json"));
    let csv_path = run.path(&format!("{base}.csv"));
    write_json(&json_path, &report.json)?;
    write_csv(&csv_path, &report.header, &report.rows)?;
    let mut inputs = BTreeMap::new();
    inputs.insert("trajectory".to_string(), file_digest(&args.trajectory)?);
    run.finish(Record {
        command: &format!("analyze {}", cmd.name()),
        digest: config_digest(&a.config)?,
        inputs,
        seeds: Vec::new(),
        artifacts: vec![json_path.clone(), csv_path.clone()],
        pass: true,
        summary: json!({ "lines": report.lines }),
    })?;
    let mut lines = report.lines;
    lines.push(format!("report -> {}", json_path.display()));
    lines.push(format!("plot data -> {}", csv_path.display()));
    Ok(Outcome { pass: true, lines })
}

fn labels_header(prefix: &[&str], n: usize) -> Vec<String> {
    prefix
        .iter()
        .map(|s| s.to_string())
        .chain((1..=n).map(|i| format!("block_{i}")))
        .collect()
}

fn analyze_graf(a: &Analysis) -> CliResult<Report> {
    let path = a.positive()?;
    let timeline = cluster_function(&a.system, &path, &a.graf).map_err(CliError::runtime)?;
    let beta = a.graf.scaling_exponent();
    let mut rows = Vec::with_capacity(path.records.len());
    for r in &path.records {
        let s = r.t.powf(-beta);
        let scaled: Vec<f64> = r.q.iter().map(|x| x * s).collect();
        let (p, v) = graf_region_with_value(&a.system, &scaled, &a.graf).map_err(CliError::runtime)?;
        let mut row = vec![r.t, p.rank() as f64, v];
        row.extend(p.labels().iter().map(|l| (*l + 1) as f64));
        rows.push(row);
    }
    let last = timeline.last().expect("nonempty timeline").clone();
    let finest = last.rank() == a.system.n();
    let lines = vec![
        format!("{} intervals, {} change points", timeline.intervals.len(), timeline.change_points.len()),
        format!("final partition {last} (rank {})", last.rank()),
    ];
    Ok(Report {
        json: json!({
            "graf": a.graf,
            "samples": path.records.len(),
            "final_partition": last,
            "final_rank": last.rank(),
            "ends_finest": finest,
            "timeline": timeline,
        }),
        header: labels_header(&["t", "rank", "graf_value"], a.system.n()),
        rows,
        lines,
    })
}

fn analyze_vonzeipel(a: &Analysis) -> CliResult<Report> {
    let path = a.positive()?;
    let series = von_zeipel_series(&a.system, &path, &a.graf).map_err(CliError::runtime)?;
    let last = series.last().expect("at least two samples");
    // J(v) = ½⟨v, v⟩_ℳ is the kinetic energy
    let j_v = kinetic_energy(&a.system, &path.last().p).map_err(CliError::runtime)?;
    let diff = (last.j - j_v).abs();
    let rows = series
        .iter()
        .map(|s| vec![s.t, s.j, s.j_ext, s.j_delta, s.dj_ext, s.dj_ext_exact, s.partition.rank() as f64])
        .collect();
    Ok(Report {
        json: json!({
            "graf": a.graf,
            "samples": series.len(),
            "final": last,
            "j_of_velocity": j_v,
            "final_difference": diff,
        }),
        header: ["t", "j", "j_ext", "j_delta", "dj_ext", "dj_ext_exact", "rank"]
            .map(String::from)
            .to_vec(),
        rows,
        lines: vec![format!("final j = {} at t = {}, J(v) = {j_v}, difference {diff:.3e}", last.j, last.t)],
    })
}

fn analyze_episodes(a: &Analysis) -> CliResult<Report> {
    let first = a.trajectory.first().state();
    let mut scenario = Scenario::new(
        a.system.clone(),
        a.trajectory.potential.clone(),
        first,
        a.trajectory.last().t,
    );
    scenario.graf = a.graf;
    scenario.poincare.m = a.m.clone();
    scenario.poincare.ell = a.ell;
    let episodes = detect_episodes(&scenario, &a.trajectory).map_err(CliError::runtime)?;
    let mut rows = Vec::new();
    let mut lines = vec![format!("{} episodes", episodes.len())];
    for e in &episodes {
        let (frac, reference) = e
            .diagnostics
            .as_ref()
            .map_or((f64::NAN, f64::NAN), |d| (d.kinetic.fraction, d.kinetic.reference));
        rows.push(vec![e.k as f64, e.interval.0, e.interval.1, e.crossings.len() as f64, frac, reference]);
        lines.push(format!(
            "episode {}: {} on ({}, {}), {} crossings",
            e.k,
            e.tuple,
            e.interval.0,
            e.interval.1,
            e.crossings.len()
        ));
    }
    Ok(Report {
        json: json!({
            "graf": a.graf,
            "m": a.m,
            "L": a.ell,
            "energy": a.energy(),
            "episodes": episodes,
        }),
        header: ["k", "t_start", "t_end", "crossings", "kinetic_fraction", "kinetic_reference"]
            .map(String::from)
            .to_vec(),
        rows,
        lines,
    })
}

#[derive(Serialize)]
struct Root {
    t: f64,
    m: u32,
    tuple: MessengerTuple,
    membership: fewbody_core::nbody::poincare::Membership,
}

fn analyze_poincare(a: &Analysis) -> CliResult<Report> {
    if a.m.is_empty() {
        return Err(CliError::input(anyhow!("no surface index: pass --m or set poincare.m")));
    }
    let tuples = match &a.tuple {
        Some(t) => vec![t.clone()],
        None => {
            let timeline = cluster_function(&a.system, &a.positive()?, &a.graf).map_err(CliError::runtime)?;
            let mut ts: Vec<MessengerTuple> = timeline_episodes(&timeline).into_iter().map(|(_, t)| t).collect();
            ts.sort();
            ts.dedup();
            ts
        }
    };
    let energy = a.energy();
    let mut roots = Vec::new();
    for tuple in &tuples {
        for &m in &a.m {
            let spec = PoincareSurfaceSpec {
                m,
                ell: a.ell,
                tuple: tuple.clone(),
                energy,
            };
            spec.validate(&a.system).map_err(CliError::input)?;
            for t in hyperplane_roots(&a.system, &a.trajectory, &spec).map_err(CliError::runtime)? {
                let state = fewbody_core::path::PhasePath::state_at(&a.trajectory, t).map_err(CliError::runtime)?;
                let membership = poincare_membership(&spec, &a.system, &state).map_err(CliError::runtime)?;
                roots.push(Root {
                    t,
                    m,
                    tuple: tuple.clone(),
                    membership,
                });
            }
        }
    }
    roots.sort_by(|x, y| x.t.total_cmp(&y.t));
    let crossings: Vec<&Root> = roots.iter().filter(|r| r.membership.member).collect();
    let mut by_m = BTreeMap::new();
    for &m in &a.m {
        by_m.insert(m.to_string(), crossings.iter().filter(|r| r.m == m).count());
    }
    let rows = roots
        .iter()
        .map(|r| {
            let w = &r.membership.witness;
            let ti = tuples.iter().position(|t| *t == r.tuple).unwrap_or(0);
            vec![
                r.t,
                r.m as f64,
                (ti + 1) as f64,
                r.membership.member as u8 as f64,
                r.membership.outgoing as u8 as f64,
                w.g_rate,
                w.p_c2_norm,
                w.q_c1_norm,
            ]
        })
        .collect();
    let mut lines = vec![format!(
        "{} crossings ({} hyperplane roots) over {} tuples",
        crossings.len(),
        roots.len(),
        tuples.len()
    )];
    for (m, c) in &by_m {
        lines.push(format!("m = {m}: {c} crossings"));
    }
    Ok(Report {
        json: json!({
            "m": a.m,
            "L": a.ell,
            "energy": energy,
            "orientation": "outgoing means dg/dt < 0 for g = <q_C2 - q_C1, q_C1/|q_C1|> + 1/m",
            "tuples": tuples,
            "crossings": crossings.len(),
            "crossings_by_m": by_m,
            "roots": roots,
        }),
        header: ["t", "m", "tuple", "member", "outgoing", "g_rate", "p_c2_norm", "q_c1_norm"]
            .map(String::from)
            .to_vec(),
        rows,
        lines,
    })
}

fn partitions(cmd: PartitionsCommand) -> CliResult<Outcome> {
    let lines: Vec<String> = match cmd {
        PartitionsCommand::List { n, rank } => enumerate_partitions(n)
            .map_err(CliError::input)?
            .into_iter()
            .filter(|p| rank.is_none_or(|k| p.rank() == k))
            .map(|p| p.to_string())
            .collect(),
        PartitionsCommand::Tuples { n } => messenger_tuples(n)
            .map_err(CliError::input)?
            .into_iter()
            .map(|t| t.to_string())
            .collect(),
    };
    Ok(Outcome { pass: true, lines })
}
