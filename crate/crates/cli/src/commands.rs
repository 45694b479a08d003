use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::json;
use trnn::automata::{equivalent, minimize as minimize_dfa, to_dot, tomita, AutomataError, DatasetHeader};
use trnn::encoding::{
    encode_dfa as encode, encode_tm as compile, verify_simulation, EncodeMode, LatticeActivation,
    LatticeError, LatticeProgram, LatticeVariant, TmLattice,
};
use trnn::extraction::{extract as run_extract, ExtractionConfig, ExtractionError, ExtractionStatus};
use trnn::seed::derive_seed;
use trnn::training::{build_splits, evaluate, run_experiment, TrainConfig, TrainError, SPLITS};
use trnn::turing::{tm_step, TmConfig, TuringError};
use trnn::{Alphabet, Dataset, Dfa, TrnnModel, TuringMachine};

use crate::manifest::{write_atomic, RunManifest};
use crate::{
    DfaSource, EncodeDfaArgs, EncodeTmArgs, EquivArgs, EvalArgs, ExtractArgs, Failure, GenDataArgs,
    MinimizeArgs, Mode, SimulateTmArgs, TrainArgs, Variant,
};

type CmdResult = Result<(), Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> CmdResult {
    write_atomic(path, text).map_err(|e| usage(format!("cannot write {}: {e}", path.display())))
}

fn command_line() -> String {
    std::env::args().collect::<Vec<_>>().join(" ")
}

fn start_run(config: Option<PathBuf>, seed: u64, out: &Path) -> CmdResult {
    RunManifest::new(command_line(), config, seed, out)
        .write()
        .map_err(|e| usage(format!("cannot create output directory {}: {e}", out.display())))
}

fn load_dfa_file(path: &Path) -> Result<Dfa, Failure> {
    Dfa::from_json(&read(path)?).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn load_dfa(source: &DfaSource) -> Result<Dfa, Failure> {
    match (&source.dfa, source.grammar) {
        (Some(path), _) => load_dfa_file(path),
        (None, Some(g)) => tomita(g).map_err(|e| usage(e.to_string())),
        (None, None) => Err(usage("give either --dfa or --grammar")),
    }
}

fn load_model(path: &Path) -> Result<TrnnModel, Failure> {
    TrnnModel::from_json(&read(path)?).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn load_tm(path: &Path) -> Result<TuringMachine, Failure> {
    TuringMachine::from_json(&read(path)?).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn variant(v: Variant) -> LatticeVariant {
    match v {
        Variant::TwoStep => LatticeVariant::TwoStep,
        Variant::RealTime => LatticeVariant::RealTime,
    }
}

fn lattice_failure(e: LatticeError) -> Failure {
    match e {
        LatticeError::Fault { .. } => Failure::Check(e.to_string()),
        other => usage(other.to_string()),
    }
}

pub fn gen_data(a: GenDataArgs) -> CmdResult {
    let dfa = tomita(a.grammar).map_err(|e| usage(e.to_string()))?;
    if let Some(s) = &a.sizes {
        if s.len() != SPLITS.len() {
            return Err(usage(format!("--sizes needs {} values", SPLITS.len())));
        }
    }
    start_run(None, a.seed, &a.out)?;
    let data_seed = derive_seed(a.seed, &format!("data/tomita{}", a.grammar));
    let splits = build_splits(&dfa, data_seed, a.sizes.as_deref());
    println!("split\tsize\tpositives\tnegatives\tmax_len\tshortfall");
    for (ds, &shortfall) in splits.sets.iter().zip(&splits.shortfall) {
        let header = DatasetHeader {
            grammar: format!("tomita{}", a.grammar),
            split: ds.name.clone(),
            max_len: ds.max_len,
            seed: a.seed,
            shortfall,
        };
        write(&a.out.join(format!("{}.tsv", ds.name)), &ds.to_tsv(dfa.alphabet(), &header))?;
        let pos = ds.positives();
        println!(
            "{}\t{}\t{}\t{}\t{}\t{}",
            ds.name,
            ds.len(),
            pos,
            ds.len() - pos,
            ds.max_len,
            shortfall
        );
    }
    Ok(())
}

pub fn encode_dfa(a: EncodeDfaArgs) -> CmdResult {
    let dfa = load_dfa(&a.source)?;
    let mode = match a.mode {
        Mode::Exact => EncodeMode::Exact,
        Mode::Sigmoid => EncodeMode::Sigmoid {
            eps0: a.eps0,
            eps: a.eps,
        },
    };
    let enc = encode(&dfa, mode).map_err(|e| usage(e.to_string()))?;
    start_run(None, 0, &a.out)?;
    write(&a.out.join("model.json"), &enc.model.to_json())?;
    let mut summary = format!(
        "states={}\nsymbols={}\nn_h={}\nmode={:?}\n",
        dfa.num_states(),
        dfa.num_symbols(),
        enc.model.n_h(),
        a.mode
    );
    if let Some(h) = enc.gain {
        let _ = writeln!(summary, "H={h}");
    }
    write(&a.out.join("summary.txt"), &summary)?;
    print!("{summary}");
    Ok(())
}

pub fn encode_tm(a: EncodeTmArgs) -> CmdResult {
    let tm = load_tm(&a.tm)?;
    let activation = match a.gain {
        Some(gain) => LatticeActivation::Sigmoid { gain },
        None => LatticeActivation::Threshold,
    };
    let program = compile(&tm, variant(a.variant), activation)
        .map_err(|e| usage(format!("{}: {e}", a.tm.display())))?;
    start_run(None, 0, &a.out)?;
    write(&a.out.join("lattice.json"), &program.to_json())?;
    let summary = format!(
        "variant={:?}\nm={}\nn={}\nK={}\ncycles_per_tm_step={}\nnonzero_weights={}\n",
        a.variant,
        tm.m,
        tm.n,
        program.slots(),
        program.variant.cycles(),
        program.weights.nonzero()
    );
    write(&a.out.join("summary.txt"), &summary)?;
    print!("{summary}");
    Ok(())
}

fn parse_tape(text: &str, m: usize) -> Result<Vec<usize>, Failure> {
    text.chars()
        .map(|c| match c.to_digit(36) {
            Some(d) if (d as usize) < m => Ok(d as usize),
            _ => Err(usage(format!("input symbol {c:?} is not one of the {m} tape symbols"))),
        })
        .collect()
}

/// Interpreter and lattice traces for the first `steps` machine steps.
fn traces(program: &LatticeProgram, input: &[usize], steps: usize) -> Result<String, TuringError> {
    let mut out = String::new();
    let mut config = TmConfig::initial(&program.tm, input)?;
    out.push_str("# interpreter\n");
    let _ = writeln!(out, "{}", config.normalized().trace_line());
    for _ in 0..steps {
        match tm_step(&program.tm, &config) {
            Ok(next) => config = next,
            Err(_) => break,
        }
        let _ = writeln!(out, "{}", config.normalized().trace_line());
    }
    out.push_str("# lattice\n");
    let start = TmConfig::initial(&program.tm, input)?;
    if let Ok(mut lattice) = TmLattice::new(program.clone(), &start) {
        let _ = writeln!(out, "{}", lattice.trace_line());
        for _ in 0..steps * program.variant.cycles() {
            let stepped = lattice.step();
            let _ = writeln!(out, "{}", lattice.trace_line());
            if stepped.is_err() {
                break;
            }
        }
    }
    Ok(out)
}

pub fn simulate_tm(a: SimulateTmArgs) -> CmdResult {
    let program = match (&a.lattice, &a.tm) {
        (Some(path), _) => LatticeProgram::from_json(&read(path)?)
            .map_err(|e| usage(format!("{}: {e}", path.display())))?,
        (None, Some(path)) => {
            let tm = load_tm(path)?;
            compile(&tm, variant(a.variant), LatticeActivation::Threshold)
                .map_err(|e| usage(format!("{}: {e}", path.display())))?
        }
        (None, None) => return Err(usage("give either --tm or --lattice")),
    };
    let input = parse_tape(&a.input, program.tm.m)?;
    start_run(None, 0, &a.out)?;
    let report = verify_simulation(&program, &input, a.steps).map_err(lattice_failure)?;
    let trace = traces(&program, &input, a.steps).map_err(|e| usage(e.to_string()))?;
    write(&a.out.join("trace.txt"), &trace)?;
    let text = serde_json::to_string_pretty(&report).expect("report serializes");
    write(&a.out.join("report.json"), &text)?;
    println!("{text}");
    if report.ok {
        Ok(())
    } else {
        Err(Failure::Check(format!(
            "lattice diverged at machine step {}: {}",
            report.first_divergence.unwrap_or(0),
            report.detail.unwrap_or_default()
        )))
    }
}

fn train_failure(e: TrainError) -> Failure {
    match e {
        TrainError::Diverged { .. } => Failure::Check(e.to_string()),
        other => usage(other.to_string()),
    }
}

pub fn train(a: TrainArgs) -> CmdResult {
    let mut cfg: TrainConfig = match &a.config {
        Some(path) => serde_json::from_str(&read(path)?)
            .map_err(|e| usage(format!("{}: {e}", path.display())))?,
        None => TrainConfig::default(),
    };
    if let Some(v) = a.seed {
        cfg.seed = v;
    }
    if let Some(v) = a.epochs {
        cfg.epochs = v;
    }
    if let Some(v) = a.lr {
        cfg.lr = v;
    }
    if let Some(v) = a.hidden {
        cfg.hidden = v;
    }
    if let Some(v) = a.batch {
        cfg.batch = v;
    }
    cfg.validate().map_err(train_failure)?;
    tomita(a.grammar).map_err(|e| usage(e.to_string()))?;
    start_run(a.config.clone(), cfg.seed, &a.out)?;
    write(
        &a.out.join("config.json"),
        &serde_json::to_string_pretty(&cfg).expect("config serializes"),
    )?;
    let exp = run_experiment(a.grammar, a.trials, &cfg, a.parallel_trials).map_err(train_failure)?;
    for (t, (trial, model)) in exp.report.trials.iter().zip(&exp.models).enumerate() {
        write(&a.out.join(format!("trial{t}_metrics.csv")), &trial.metrics.to_csv())?;
        write(&a.out.join(format!("trial{t}_model.json")), &model.to_json())?;
    }
    let summary = serde_json::to_string_pretty(&exp.report).expect("report serializes");
    write(&a.out.join("summary.json"), &summary)?;
    println!("grammar\ttomita{}", a.grammar);
    for (split, acc) in &exp.report.mean_acc {
        println!("{split}\t{acc:.2} +- {:.2}", exp.report.std_acc[split]);
    }
    match exp.report.mean_epochs_to_perfect_val {
        Some(e) => println!("epochs_to_perfect_val\t{e:.1}"),
        None => println!("epochs_to_perfect_val\tnot reached"),
    }
    Ok(())
}

pub fn eval(a: EvalArgs) -> CmdResult {
    let model = load_model(&a.model)?;
    let alphabet = Alphabet::new(a.alphabet.chars()).map_err(|e| usage(e.to_string()))?;
    if model.m() != alphabet.len() {
        return Err(Failure::Check(format!(
            "model reads {} symbols but alphabet {:?} has {}",
            model.m(),
            a.alphabet,
            alphabet.len()
        )));
    }
    let (data, _) = Dataset::from_tsv(&read(&a.data)?, &alphabet).map_err(|e| match e {
        AutomataError::UnknownSymbol(_) => {
            Failure::Check(format!("{}: {e} {:?}", a.data.display(), a.alphabet))
        }
        other => usage(format!("{}: {other}", a.data.display())),
    })?;
    start_run(None, 0, &a.out)?;
    let acc = evaluate(&model, &data).map_err(|e| Failure::Check(e.to_string()))?;
    let report = json!({
        "model": a.model,
        "data": a.data,
        "strings": data.len(),
        "accuracy": acc,
    });
    write(&a.out.join("eval.json"), &serde_json::to_string_pretty(&report).expect("json"))?;
    println!("accuracy\t{acc:.2}");
    Ok(())
}

pub fn extract(a: ExtractArgs) -> CmdResult {
    let model = load_model(&a.model)?;
    let oracle = match (&a.oracle, a.grammar) {
        (Some(path), _) => load_dfa_file(path)?,
        (None, Some(g)) => tomita(g).map_err(|e| usage(e.to_string()))?,
        (None, None) => return Err(usage("give either --oracle or --grammar")),
    };
    let mut cfg: ExtractionConfig = match &a.config {
        Some(path) => serde_json::from_str(&read(path)?)
            .map_err(|e| usage(format!("{}: {e}", path.display())))?,
        None => ExtractionConfig::default(),
    };
    if let Some(v) = a.seed {
        cfg.seed = v;
    }
    if let Some(v) = a.timeout {
        cfg.timeout_seconds = v;
    }
    if let Some(v) = a.k_max {
        cfg.k_max = v;
    }
    cfg.validate().map_err(|e| usage(e.to_string()))?;
    start_run(a.config.clone(), cfg.seed, &a.out)?;
    let report = run_extract(&model, &oracle, &cfg).map_err(|e| match e {
        ExtractionError::AlphabetSize { .. } => Failure::Check(e.to_string()),
        other => usage(other.to_string()),
    })?;
    write(&a.out.join("report.json"), &report.to_json())?;
    write(&a.out.join(format!("{}.oracle.dot", a.name)), &to_dot(&oracle, "oracle"))?;
    if let Some(dfa) = &report.dfa {
        write(&a.out.join(format!("{}.extracted.dot", a.name)), &to_dot(dfa, "extracted"))?;
    }
    println!(
        "status\t{:?}\nk\t{}\nraw_states\t{}",
        report.status, report.k, report.raw_state_count
    );
    if let Some(c) = &report.comparison {
        println!("equivalent\t{}\nisomorphic\t{}", c.equivalent, c.isomorphic);
    }
    match report.status {
        ExtractionStatus::Ok => Ok(()),
        status => Err(Failure::Check(format!("extraction finished with status {status:?}"))),
    }
}

pub fn minimize(a: MinimizeArgs) -> CmdResult {
    let dfa = load_dfa(&a.source)?;
    let min = minimize_dfa(&dfa);
    match &a.out {
        Some(path) => write(path, &min.to_json())?,
        None => println!("{}", min.to_json()),
    }
    if a.dot {
        print!("{}", to_dot(&min, "minimized"));
    }
    eprintln!("states\t{} -> {}", dfa.num_states(), min.num_states());
    Ok(())
}

pub fn equiv(a: EquivArgs) -> CmdResult {
    let x = load_dfa_file(&a.a)?;
    let y = load_dfa_file(&a.b)?;
    let eq = equivalent(&x, &y).map_err(|e| usage(e.to_string()))?;
    let counterexample = eq.counterexample.as_ref().map(|w| x.alphabet().decode(w));
    println!(
        "{}",
        json!({ "equivalent": eq.equal, "counterexample": counterexample })
    );
    if eq.equal {
        Ok(())
    } else {
        Err(Failure::Check("automata differ".into()))
    }
}
