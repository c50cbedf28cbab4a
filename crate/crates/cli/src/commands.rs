use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use rand::seq::SliceRandom;
use rmprofile::batch::ThresholdRule;
use rmprofile::classifier::{self, accuracy};
use rmprofile::experiment::{
    self, accuracy_experiment, bench_complexity, compression_sweep, fleet_motifs, labeled_fleet, latency_histogram,
    median_latency, run_switch, summarise_compression, switch_fleet, BenchConfig, FleetUser, ProfileSetup, Split,
};
use rmprofile::io::csv::{load_daily_csv, write_wide_csv};
use rmprofile::io::synthetic::{generate_synthetic, Archetype, SyntheticScenario};
use rmprofile::{
    snapshot_load, snapshot_save, DayPattern, DistanceConfig, DropStrategy, Error, Label, Latency, Method,
    ProfileParams, Snapshot, UpdaterSpec,
};

use crate::args::{
    Command, CsvArgs, Experiment, FleetArgs, FormatArg, NetModeArg, OptionalInputArgs, ProfileArgs, TrainArgs,
};
use crate::report::{num, write_report, Provenance};

pub fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Init {
            input,
            profile,
            snapshot,
        } => init(&input.input, &input.csv, &profile, &snapshot),
        Command::Update {
            snapshot,
            values,
            input,
        } => update(&snapshot, values.as_deref(), &input),
        Command::Rm { snapshot } => rm(&snapshot),
        Command::Train {
            fleet,
            profile,
            train,
            model,
        } => train_model(&fleet, &profile, &train, &model),
        Command::Classify {
            model,
            snapshot,
            input,
            labels,
            output,
        } => classify(
            &model,
            snapshot.as_deref(),
            &input,
            labels.as_deref(),
            output.as_deref(),
        ),
        Command::Experiment(e) => match e {
            Experiment::Switch {
                fleet,
                profile,
                train,
                switch_day,
                from,
                out_dir,
            } => switch(&fleet, &profile, &train, switch_day, from.into(), &out_dir),
            Experiment::Compression {
                fleet,
                profile,
                train,
                sweep,
                lengths,
                out_dir,
            } => compression(&fleet, &profile, &train, &sweep, &lengths, &out_dir),
            Experiment::Accuracy {
                fleet,
                profile,
                train,
                memories,
                lengths,
                test_fraction,
                out_dir,
            } => accuracy_tables(&fleet, &profile, &train, &memories, &lengths, test_fraction, &out_dir),
        },
        Command::Bench {
            sizes,
            methods,
            reps,
            profile,
            output,
        } => bench(sizes, methods, reps, &profile, output.as_deref()),
        Command::Generate {
            synth,
            archetype,
            mixed,
            switch_day,
            output,
            labels,
        } => {
            let fleet = if mixed {
                labeled_fleet(synth.users, synth.days, synth.noise, synth.seed)
            } else {
                switch_fleet(
                    synth.users,
                    synth.days,
                    switch_day,
                    archetype.into(),
                    synth.noise,
                    synth.seed,
                )
            };
            write_fleet(&fleet, &output, labels.as_deref())
        }
    }
}

fn invalid(msg: impl Into<String>) -> anyhow::Error {
    Error::InvalidInput(msg.into()).into()
}

fn load_users(input: &Path, csv: &CsvArgs, prep: &DistanceConfig) -> Result<BTreeMap<String, Vec<DayPattern>>> {
    if csv.format == FormatArg::SolarHome && csv.net_mode == NetModeArg::Both {
        return Err(invalid("--net-mode both applies to fleet commands only"));
    }
    let ingested = load_daily_csv(input, &csv.schema(), prep)?;
    match &csv.report {
        Some(path) => {
            let file = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
            ingested.write_report(file)?;
        }
        None if !ingested.rejected.is_empty() => ingested.write_report(std::io::stderr())?,
        None => {}
    }
    Ok(ingested.users)
}

fn pick_user(mut users: BTreeMap<String, Vec<DayPattern>>, wanted: Option<&str>) -> Result<(String, Vec<DayPattern>)> {
    match wanted {
        Some(u) => users
            .remove_entry(u)
            .ok_or_else(|| invalid(format!("user {u:?} not found in input"))),
        None if users.len() == 1 => Ok(users.pop_first().expect("one user")),
        None if users.is_empty() => Err(invalid("input holds no complete days")),
        None => Err(invalid(format!(
            "input holds {} users; pick one with --user",
            users.len()
        ))),
    }
}

fn read_labels(path: &Path) -> Result<BTreeMap<String, Label>> {
    let mut r = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| invalid(format!("{}: {e}", path.display())))?;
    let mut out = BTreeMap::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| invalid(format!("{}: {e}", path.display())))?;
        let (Some(user), Some(label)) = (rec.get(0), rec.get(1)) else {
            return Err(invalid(format!(
                "{}: row {} needs user and label",
                path.display(),
                i + 2
            )));
        };
        out.insert(user.to_string(), label.parse::<Label>()?);
    }
    Ok(out)
}

/// Labelled users from `--input`/`--labels`, or the synthetic fleet `synthetic` builds.
fn load_fleet(
    args: &FleetArgs,
    prep: &DistanceConfig,
    synthetic: impl FnOnce() -> Vec<FleetUser>,
) -> Result<Vec<FleetUser>> {
    let Some(input) = &args.input else {
        return synthetic()
            .into_iter()
            .map(|mut u| {
                u.days = u
                    .days
                    .iter()
                    .map(|d| prep.prepare(d.day_index, &d.values))
                    .collect::<rmprofile::Result<_>>()?;
                Ok(u)
            })
            .collect();
    };
    if args.csv.format == FormatArg::SolarHome && args.csv.net_mode == NetModeArg::Both {
        let mut fleet = Vec::new();
        for (mode, tag, label) in [
            (NetModeArg::Net, "net", Label::Positive),
            (NetModeArg::LoadOnly, "load", Label::Negative),
        ] {
            let csv = CsvArgs {
                net_mode: mode,
                report: args.csv.report.as_ref().map(|p| p.with_extension(format!("{tag}.csv"))),
                ..args.csv.clone()
            };
            for (id, days) in load_users(input, &csv, prep)? {
                fleet.push(FleetUser {
                    id: format!("{id}:{tag}"),
                    days,
                    label: Some(label),
                    switch_day: None,
                });
            }
        }
        fleet.sort_by(|a, b| a.id.cmp(&b.id));
        if fleet.is_empty() {
            return Err(invalid("input holds no complete days"));
        }
        return Ok(fleet);
    }
    let labels = match &args.labels {
        Some(p) => read_labels(p)?,
        None => BTreeMap::new(),
    };
    let users = load_users(input, &args.csv, prep)?;
    if users.is_empty() {
        return Err(invalid("input holds no complete days"));
    }
    Ok(users
        .into_iter()
        .map(|(id, days)| FleetUser {
            label: labels.get(&id).copied(),
            id,
            days,
            switch_day: None,
        })
        .collect())
}

fn fleet_m(fleet: &[FleetUser]) -> Result<usize> {
    fleet
        .iter()
        .flat_map(|u| u.days.first())
        .map(DayPattern::len)
        .next()
        .ok_or_else(|| invalid("fleet has no days"))
}

fn setup(profile: &ProfileArgs, default_method: Method, m: usize) -> Result<ProfileSetup> {
    Ok(ProfileSetup {
        method: profile.method.unwrap_or(default_method),
        threshold: profile.threshold,
        d_rep: profile.d_rep,
        memory: profile.memory,
        strategy: profile.strategy,
        distance: profile.distance(m)?,
        calibration_days: profile.calibration_days,
    })
}

fn rule_text(rule: &ThresholdRule) -> String {
    match rule {
        ThresholdRule::Fixed(t) => t.to_string(),
        ThresholdRule::Auto(q) => format!("auto:{q}"),
    }
}

fn init(input: &Path, csv: &CsvArgs, profile: &ProfileArgs, snapshot: &Path) -> Result<()> {
    let users = load_users(input, csv, &profile.preparation())?;
    let (user, days) = pick_user(users, csv.user.as_deref())?;
    if days.len() < 2 {
        return Err(invalid(format!(
            "user {user} has {} complete day(s); init needs at least 2",
            days.len()
        )));
    }
    let m = days[0].len();
    let distance = profile.distance(m)?;
    let threshold = profile.threshold.resolve(&days, &distance)?;
    let params = ProfileParams {
        threshold,
        d_rep: profile.d_rep,
        memory: profile.memory,
        strategy: profile.strategy,
    };
    if matches!(profile.method, Some(Method::CodebookCr | Method::CodebookPd)) && profile.d_rep > threshold {
        log::warn!(
            "d_rep {} exceeds threshold {threshold:.6}: absorbed days will count as dissimilar to their codeword",
            profile.d_rep
        );
    }
    let n = days.len();
    let state = UpdaterSpec::new(profile.method.unwrap_or(Method::Additive), params, distance).init(days)?;
    let rm = state.refined_motif()?;
    let method = state.method();
    let snap = Snapshot::profile(state)
        .with_meta("user", &user)
        .with_meta("threshold_rule", rule_text(&profile.threshold))
        .with_meta("command", Provenance::new().entries()[1].1.clone());
    snapshot_save(&snap, snapshot)?;
    println!(
        "user {user}: {n} days, m={m}, method {}, threshold {threshold:.6}, refined motif at record {} (sp {:.6})",
        method.name(),
        rm.source_index,
        rm.sp_value
    );
    Ok(())
}

fn update(snapshot: &Path, values: Option<&str>, input: &OptionalInputArgs) -> Result<()> {
    let snap = snapshot_load(snapshot)?;
    let meta = snap.meta.clone();
    let mut state = snap.into_profile()?;
    let next = state.last_day_index().map_or(state.len() as u32, |d| d + 1);
    let days: Vec<DayPattern> = match (values, &input.input) {
        (Some(v), _) => {
            let raw = v
                .split(',')
                .map(|t| {
                    t.trim()
                        .parse::<f64>()
                        .map_err(|_| invalid(format!("reading {t:?} is not a number")))
                })
                .collect::<Result<Vec<f64>>>()?;
            vec![state.distance().prepare(next, &raw)?]
        }
        (None, Some(path)) => {
            let users = load_users(path, &input.csv, state.distance())?;
            let wanted = input.csv.user.as_deref().or(meta.get("user").map(String::as_str));
            let wanted = wanted.filter(|u| users.contains_key(*u) || input.csv.user.is_some());
            let (_, days) = pick_user(users, wanted)?;
            let first = days.first().map_or(0, |d| d.day_index);
            days.into_iter()
                .map(|mut d| {
                    d.day_index = next + (d.day_index - first);
                    d
                })
                .collect()
        }
        (None, None) => return Err(invalid("give the new day with --values or --input")),
    };
    if days.is_empty() {
        return Err(invalid("no complete day to apply"));
    }
    let k = days.len();
    for d in days {
        state.update(d)?;
    }
    let rm = state.refined_motif()?;
    let n = state.len();
    let mut out = Snapshot::profile(state);
    out.meta = meta;
    snapshot_save(&out, snapshot)?;
    println!(
        "applied {k} day(s); {n} records; refined motif at record {} (sp {:.6})",
        rm.source_index, rm.sp_value
    );
    Ok(())
}

fn rm(snapshot: &Path) -> Result<()> {
    let state = snapshot_load(snapshot)?.into_profile()?;
    let rm = state.refined_motif()?;
    println!("record {}", rm.source_index);
    println!("day {}", rm.pattern.day_index);
    println!("sp {}", rm.sp_value);
    let values: Vec<String> = rm.pattern.values.iter().map(|v| v.to_string()).collect();
    println!("values {}", values.join(","));
    Ok(())
}

fn samples(fleet: &[FleetUser], motifs: &[(String, rmprofile::RefinedMotif)]) -> Vec<(Vec<f64>, Label)> {
    let labels: BTreeMap<&str, Label> = fleet.iter().filter_map(|u| Some((u.id.as_str(), u.label?))).collect();
    motifs
        .iter()
        .filter_map(|(id, rm)| Some((rm.pattern.values.clone(), *labels.get(id.as_str())?)))
        .collect()
}

fn train_model(fleet_args: &FleetArgs, profile: &ProfileArgs, train: &TrainArgs, model_path: &Path) -> Result<()> {
    let s = &fleet_args.synth;
    let fleet = load_fleet(fleet_args, &profile.preparation(), || {
        labeled_fleet(s.users, s.days, s.noise, s.seed)
    })?;
    let setup = setup(profile, Method::Additive, fleet_m(&fleet)?)?;
    let motifs = fleet_motifs(&fleet, &setup, None)?;
    let data = samples(&fleet, &motifs);
    let model = classifier::train_vectors(&data, &train.config())?;
    let acc = accuracy(&model, &data)?;
    let snap = Snapshot::classifier(model)
        .with_meta("setup", serde_json::to_string(&setup)?)
        .with_meta("train", serde_json::to_string(&train.config())?)
        .with_meta("seed", s.seed.to_string())
        .with_meta("command", Provenance::new().entries()[1].1.clone());
    snapshot_save(&snap, model_path)?;
    println!(
        "trained on {} users with {}; training accuracy {:.4}",
        data.len(),
        setup.name(),
        acc
    );
    Ok(())
}

fn classify(
    model_path: &Path,
    snapshot: Option<&Path>,
    input: &OptionalInputArgs,
    labels: Option<&Path>,
    output: Option<&Path>,
) -> Result<()> {
    let snap = snapshot_load(model_path)?;
    let meta = snap.meta.clone();
    let model = snap.into_classifier()?;
    if !model.is_trained() {
        return Err(Error::InvalidState("classifier has not been trained".into()).into());
    }
    let motifs: Vec<(String, rmprofile::RefinedMotif)> = match (snapshot, &input.input) {
        (Some(p), _) => {
            let s = snapshot_load(p)?;
            let user = s.meta.get("user").cloned().unwrap_or_else(|| "-".into());
            vec![(user, s.into_profile()?.refined_motif()?)]
        }
        (None, Some(path)) => {
            let setup: ProfileSetup = meta
                .get("setup")
                .ok_or_else(|| invalid("model records no profile setup; classify a --snapshot instead"))
                .and_then(|t| serde_json::from_str(t).map_err(|e| invalid(format!("model setup: {e}"))))?;
            let users = load_users(path, &input.csv, &setup.distance)?;
            let fleet: Vec<FleetUser> = users
                .into_iter()
                .filter(|(id, _)| input.csv.user.as_ref().is_none_or(|u| u == id))
                .map(|(id, days)| FleetUser {
                    id,
                    days,
                    label: None,
                    switch_day: None,
                })
                .collect();
            fleet_motifs(&fleet, &setup, None)?
        }
        (None, None) => return Err(invalid("give a --snapshot or an --input to classify")),
    };
    let truth = labels.map(read_labels).transpose()?;
    let mut rows = Vec::new();
    let (mut hits, mut scored) = (0, 0);
    for (user, rm) in &motifs {
        let (p, label) = model.predict(rm)?;
        let known = truth.as_ref().and_then(|t| t.get(user));
        if let Some(k) = known {
            scored += 1;
            hits += usize::from(*k == label);
        }
        println!("{user}\t{label}\t{p:.6}");
        rows.push(vec![
            user.clone(),
            label.to_string(),
            num(p),
            known.map_or(String::new(), |k| k.to_string()),
        ]);
    }
    if scored > 0 {
        println!(
            "accuracy {:.4} over {scored} labelled users",
            hits as f64 / scored as f64
        );
    }
    if let Some(out) = output {
        let prov = Provenance::new().with("model", model_path.display());
        write_report(out, &prov, &["user", "label", "probability", "truth"], &rows)?;
    }
    Ok(())
}

/// Splices each user of type `from` with a user of the other type at `switch_day`.
fn spliced_switch_fleet(fleet: &[FleetUser], from: Label, switch_day: usize, seed: u64) -> Result<Vec<FleetUser>> {
    let long_enough = |u: &&FleetUser| u.days.len() > switch_day;
    let sources: Vec<&FleetUser> = fleet
        .iter()
        .filter(|u| u.label == Some(from))
        .filter(long_enough)
        .collect();
    let mut targets: Vec<&FleetUser> = fleet
        .iter()
        .filter(|u| u.label == Some(from.flipped()))
        .filter(long_enough)
        .collect();
    if sources.is_empty() || targets.is_empty() {
        return Err(invalid(format!(
            "switch needs users of both types with more than {switch_day} days"
        )));
    }
    targets.shuffle(&mut <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed));
    Ok(sources
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let t = targets[i % targets.len()];
            let n = s.days.len().min(t.days.len());
            let mut days: Vec<DayPattern> = s.days[..switch_day].to_vec();
            days.extend(t.days[switch_day..n].iter().cloned());
            for (k, d) in days.iter_mut().enumerate() {
                d.day_index = k as u32;
            }
            FleetUser {
                id: format!("{}>{}", s.id, t.id),
                days,
                label: Some(from),
                switch_day: Some(switch_day),
            }
        })
        .collect())
}

fn switch(
    fleet_args: &FleetArgs,
    profile: &ProfileArgs,
    train: &TrainArgs,
    switch_day: usize,
    from: Archetype,
    out_dir: &Path,
) -> Result<()> {
    let s = &fleet_args.synth;
    let prep = profile.preparation();
    let labelled = load_fleet(fleet_args, &prep, || {
        labeled_fleet(s.users, s.days, s.noise, s.seed.wrapping_add(1))
    })?;
    let from_label = experiment::archetype_label(from);
    let switching = if fleet_args.input.is_some() {
        spliced_switch_fleet(&labelled, from_label, switch_day, s.seed)?
    } else {
        load_fleet(fleet_args, &prep, || {
            switch_fleet(s.users, s.days, Some(switch_day), from, s.noise, s.seed)
        })?
    };
    let m = fleet_m(&labelled)?;
    let train_setup = setup(profile, Method::Additive, m)?;
    let detect = ProfileSetup {
        method: Method::Fixed,
        ..train_setup.clone()
    };
    let model = experiment::train_on_fleet(&labelled, &train_setup, &train.config())?;
    let rows = run_switch(&switching, &model, &detect, &DropStrategy::ALL)?;

    fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let prov = Provenance::new()
        .with("seed", s.seed)
        .with("switch_day", switch_day)
        .with("from", format!("{from:?}"))
        .with_json("train_setup", &train_setup)
        .with_json("detect_setup", &detect)
        .with_json("train", &train.config());
    let latency_cell = |l: Latency| l.updates().map_or("undetected".to_string(), |n| n.to_string());
    let per_user: Vec<Vec<String>> = rows
        .iter()
        .map(|r| vec![r.user.clone(), r.strategy.name().into(), latency_cell(r.latency)])
        .collect();
    write_report(
        &out_dir.join("switch_latency.csv"),
        &prov,
        &["user", "strategy", "latency"],
        &per_user,
    )?;
    let hist: Vec<Vec<String>> = latency_histogram(&rows)
        .iter()
        .map(|h| {
            vec![
                h.strategy.name().into(),
                h.latency.map_or("undetected".into(), |n| n.to_string()),
                h.users.to_string(),
            ]
        })
        .collect();
    write_report(
        &out_dir.join("switch_histogram.csv"),
        &prov,
        &["strategy", "latency", "users"],
        &hist,
    )?;
    let mut summary = Vec::new();
    println!("strategy\tmedian\tundetected");
    for st in DropStrategy::ALL {
        let all = rows.iter().filter(|r| r.strategy == st).count();
        let missed = rows
            .iter()
            .filter(|r| r.strategy == st && r.latency == Latency::Undetected)
            .count();
        let median = median_latency(&rows, st).map_or("-".into(), latency_cell);
        println!("{}\t{median}\t{missed}/{all}", st.name());
        summary.push(vec![st.name().into(), median, missed.to_string(), all.to_string()]);
    }
    write_report(
        &out_dir.join("switch_summary.csv"),
        &prov,
        &["strategy", "median_latency", "undetected", "users"],
        &summary,
    )?;
    Ok(())
}

fn default_lengths(lengths: &[usize], fleet: &[FleetUser]) -> Vec<usize> {
    if lengths.is_empty() {
        vec![fleet.iter().map(|u| u.days.len()).max().unwrap_or(0)]
    } else {
        lengths.to_vec()
    }
}

fn compression(
    fleet_args: &FleetArgs,
    profile: &ProfileArgs,
    train: &TrainArgs,
    sweep: &[f64],
    lengths: &[usize],
    out_dir: &Path,
) -> Result<()> {
    let s = &fleet_args.synth;
    let fleet = load_fleet(fleet_args, &profile.preparation(), || {
        labeled_fleet(s.users, s.days, s.noise, s.seed)
    })?;
    let base = setup(profile, Method::CodebookPd, fleet_m(&fleet)?)?;
    if !matches!(base.method, Method::CodebookCr | Method::CodebookPd) {
        return Err(invalid("compression sweeps need --method codebook-cr or codebook-pd"));
    }
    let lengths = default_lengths(lengths, &fleet);
    let rows = compression_sweep(&fleet, &base, sweep, &lengths)?;
    let summary = summarise_compression(&rows);

    let has_labels = fleet.iter().any(|u| u.label == Some(Label::Positive))
        && fleet.iter().any(|u| u.label == Some(Label::Negative));
    let mut acc: BTreeMap<(usize, u64), f64> = BTreeMap::new();
    if has_labels {
        let setups: Vec<ProfileSetup> = sweep
            .iter()
            .map(|&d_rep| ProfileSetup { d_rep, ..base.clone() })
            .collect();
        let split = Split {
            test_fraction: 0.3,
            seed: s.seed,
        };
        for r in accuracy_experiment(&fleet, &setups, &lengths, &train.config(), Some(&split))? {
            let d_rep = setups
                .iter()
                .find(|st| st.name() == r.config)
                .map_or(f64::NAN, |st| st.d_rep);
            acc.insert((r.days, d_rep.to_bits()), r.accuracy);
        }
    }

    fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let prov = Provenance::new()
        .with("seed", s.seed)
        .with_json("setup", &base)
        .with_json("train", &train.config());
    let per_user: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.user.clone(),
                r.d_rep.to_string(),
                r.days.to_string(),
                r.codewords.to_string(),
                r.tsd_units.to_string(),
                num(r.saving),
            ]
        })
        .collect();
    write_report(
        &out_dir.join("compression_users.csv"),
        &prov,
        &["user", "d_rep", "days", "codewords", "tsd_units", "saving"],
        &per_user,
    )?;
    println!("days\td_rep\tusers\tmin\tmax\tmean\taccuracy");
    let table: Vec<Vec<String>> = summary
        .iter()
        .map(|c| {
            let a = acc.get(&(c.days, c.d_rep.to_bits())).map_or(String::new(), |a| num(*a));
            println!(
                "{}\t{}\t{}\t{:.3}\t{:.3}\t{:.3}\t{a}",
                c.days, c.d_rep, c.users, c.min_saving, c.max_saving, c.mean_saving
            );
            vec![
                c.days.to_string(),
                c.d_rep.to_string(),
                c.users.to_string(),
                num(c.min_saving),
                num(c.max_saving),
                num(c.mean_saving),
                a,
            ]
        })
        .collect();
    write_report(
        &out_dir.join("compression_summary.csv"),
        &prov,
        &[
            "days",
            "d_rep",
            "users",
            "min_saving",
            "max_saving",
            "mean_saving",
            "accuracy",
        ],
        &table,
    )?;
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn accuracy_tables(
    fleet_args: &FleetArgs,
    profile: &ProfileArgs,
    train: &TrainArgs,
    memories: &[usize],
    lengths: &[usize],
    test_fraction: f64,
    out_dir: &Path,
) -> Result<()> {
    let s = &fleet_args.synth;
    let fleet = load_fleet(fleet_args, &profile.preparation(), || {
        labeled_fleet(s.users, s.days, s.noise, s.seed)
    })?;
    let base = setup(profile, Method::Additive, fleet_m(&fleet)?)?;
    let lengths = default_lengths(lengths, &fleet);
    let split = Split {
        test_fraction,
        seed: s.seed,
    };
    let split = (test_fraction > 0.0).then_some(&split);
    let cfg = train.config();
    let fixed = |memory: usize, strategy: DropStrategy| ProfileSetup {
        method: Method::Fixed,
        memory,
        strategy,
        ..base.clone()
    };

    fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let prov = Provenance::new()
        .with("seed", s.seed)
        .with("test_fraction", test_fraction)
        .with_json("setup", &base)
        .with_json("train", &cfg);

    // strategy x memory size, at the longest stream length
    let longest = *lengths.iter().max().expect("at least one length");
    let mut table1 = Vec::new();
    println!("memory\tlow\tmedium\thigh");
    for &memory in memories {
        let setups: Vec<ProfileSetup> = DropStrategy::ALL.iter().map(|&st| fixed(memory, st)).collect();
        let rows = accuracy_experiment(&fleet, &setups, &[longest], &cfg, split)?;
        let cells: Vec<String> = rows.iter().map(|r| num(r.accuracy)).collect();
        println!("{memory}\t{}", cells.join("\t"));
        table1.push(std::iter::once(memory.to_string()).chain(cells).collect());
    }
    write_report(
        &out_dir.join("accuracy_memory.csv"),
        &prov,
        &["memory", "low", "medium", "high"],
        &table1,
    )?;

    // method x stream length
    let codebook_method = match base.method {
        Method::CodebookCr => Method::CodebookCr,
        _ => Method::CodebookPd,
    };
    let setups = vec![
        ProfileSetup {
            method: Method::Additive,
            ..base.clone()
        },
        fixed(base.memory, DropStrategy::LowInertia),
        fixed(base.memory, DropStrategy::HighInertia),
        fixed(base.memory, DropStrategy::MediumInertia),
        ProfileSetup {
            method: codebook_method,
            ..base.clone()
        },
    ];
    let header = [
        "days",
        "additive",
        "fixed-low",
        "fixed-high",
        "fixed-medium",
        "codebook",
    ];
    println!("{}", header.join("\t"));
    let mut table3 = Vec::new();
    for &days in &lengths {
        let rows = accuracy_experiment(&fleet, &setups, &[days], &cfg, split)?;
        let cells: Vec<String> = rows.iter().map(|r| num(r.accuracy)).collect();
        println!("{days}\t{}", cells.join("\t"));
        table3.push(std::iter::once(days.to_string()).chain(cells).collect());
    }
    write_report(&out_dir.join("accuracy_methods.csv"), &prov, &header, &table3)?;
    Ok(())
}

fn bench(
    sizes: Vec<usize>,
    methods: Vec<Method>,
    reps: usize,
    profile: &ProfileArgs,
    output: Option<&Path>,
) -> Result<()> {
    let m = profile.slice.map_or(48, |s| s.len());
    let mut cfg = BenchConfig {
        sizes,
        methods: if methods.is_empty() {
            Method::ALL.to_vec()
        } else {
            methods
        },
        memory: profile.memory,
        strategy: profile.strategy,
        d_rep: profile.d_rep,
        distance: profile.distance(m)?,
        reps,
        ..Default::default()
    };
    if profile.slice.is_some() || profile.max_scale {
        return Err(invalid(
            "bench runs on full synthetic days; --slice and --max-scale are not supported",
        ));
    }
    cfg.threshold = match profile.threshold {
        ThresholdRule::Fixed(t) => t,
        rule => {
            let calib = generate_synthetic(&SyntheticScenario {
                archetype: Archetype::Solar,
                switch_day: None,
                days: profile.calibration_days.max(2),
                noise: cfg.noise,
                seed: cfg.seed,
            });
            rule.resolve(&calib, &cfg.distance)?
        }
    };
    let rows = bench_complexity(&cfg)?;
    println!("method\tn\tper_update_us\tstored_scalars\tmax_stored_scalars\tmemory_saving");
    let table: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            println!(
                "{}\t{}\t{:.2}\t{}\t{}\t{:.4}",
                r.method.name(),
                r.n,
                r.per_update_secs * 1e6,
                r.stored_scalars,
                r.max_stored_scalars,
                r.memory_saving
            );
            vec![
                r.method.name().into(),
                r.n.to_string(),
                num(r.per_update_secs * 1e6),
                r.stored_scalars.to_string(),
                r.max_stored_scalars.to_string(),
                num(r.memory_saving),
            ]
        })
        .collect();
    if let Some(out) = output {
        let prov = Provenance::new().with_json("config", &cfg);
        write_report(
            out,
            &prov,
            &[
                "method",
                "n",
                "per_update_us",
                "stored_scalars",
                "max_stored_scalars",
                "memory_saving",
            ],
            &table,
        )?;
    }
    Ok(())
}

fn write_fleet(fleet: &[FleetUser], output: &Path, labels: Option<&Path>) -> Result<()> {
    let users: BTreeMap<String, Vec<DayPattern>> = fleet.iter().map(|u| (u.id.clone(), u.days.clone())).collect();
    let file = fs::File::create(output).with_context(|| format!("creating {}", output.display()))?;
    let start = chrono::NaiveDate::from_ymd_opt(2024, 1, 1).expect("valid date");
    write_wide_csv(std::io::BufWriter::new(file), &users, start)?;
    if let Some(path) = labels {
        let rows: Vec<Vec<String>> = fleet
            .iter()
            .map(|u| vec![u.id.clone(), u.label.map_or(String::new(), |l| l.to_string())])
            .collect();
        let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
        w.write_record(["user", "label"])?;
        for r in rows {
            w.write_record(r)?;
        }
        w.flush()?;
    }
    println!("wrote {} users to {}", fleet.len(), output.display());
    Ok(())
}
