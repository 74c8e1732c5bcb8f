//! Stage implementations. Each stage reads its inputs, computes, writes its
//! outputs, and prints a short summary to stderr; nothing is stateful beyond
//! the files.

use std::fs;
use std::path::Path;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use swsynth::abstraction::{build_imdp, Imdp};
use swsynth::geometry::Partition;
use swsynth::learning::{
    build_residuals, learn_modes, read_dataset_csv, LearnedMode, LearnedModeRecord, NoiseModel,
    RkhsBoundSource, Sample,
};
use swsynth::ltlf::{parse, to_dfa, Dfa};
use swsynth::runtime::{monte_carlo, simulate, trial_seed, McReport};
use swsynth::synthesis::{self, CellClass, CellOutcome, IviOptions, Pimdp, ProductStrategy};

use crate::config::{resolve_path, RunConfig};
use crate::scenario::Scenario;
use crate::CliError;

/// Learned-stage output file.
#[derive(Debug, Serialize, Deserialize)]
pub struct LearnedFile {
    pub noise: NoiseModel,
    pub modes: Vec<LearnedModeRecord>,
}

/// Synthesis-stage output file; self-contained for validation.
#[derive(Debug, Serialize, Deserialize)]
pub struct ResultFile {
    pub formula: String,
    pub ap: Vec<String>,
    pub threshold: f64,
    pub partition: Partition,
    pub dfa: Dfa,
    pub strategy: ProductStrategy,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub upper_opt: Vec<f64>,
    pub cells: Vec<CellOutcome>,
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    fs::write(path, text)?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::numeric(format!("serialization failed: {e}")))?;
    text.push('\n');
    write_text(path, &text)
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))
}

pub fn gen_data(
    scenario_name: &str,
    samples_per_mode: usize,
    seed: u64,
    out: &Path,
) -> Result<(), CliError> {
    let scenario = Scenario::parse(scenario_name)?;
    let truth = scenario.truth();
    let (lower, upper) = scenario.domain();
    let n = scenario.state_dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut csv = String::from("u");
    for i in 1..=n {
        csv.push_str(&format!(",x{i}"));
    }
    for i in 1..=n {
        csv.push_str(&format!(",xp{i}"));
    }
    csv.push('\n');
    for mode in 1..=scenario.num_modes() {
        for _ in 0..samples_per_mode {
            let x: Vec<f64> = (0..n)
                .map(|i| rng.random_range(lower[i]..=upper[i]))
                .collect();
            let next = truth.step(mode, &x, &mut rng);
            csv.push_str(&mode.to_string());
            for v in &x {
                csv.push_str(&format!(",{v}"));
            }
            for v in &next {
                csv.push_str(&format!(",{v}"));
            }
            csv.push('\n');
        }
    }
    write_text(out, &csv)?;
    eprintln!(
        "gen-data: {} rows ({} modes x {} samples) -> {}",
        scenario.num_modes() * samples_per_mode,
        scenario.num_modes(),
        samples_per_mode,
        out.display()
    );
    Ok(())
}

pub fn learn(config_path: &Path, data: Option<&Path>, out: Option<&Path>) -> Result<(), CliError> {
    let cfg = RunConfig::load(config_path)?;
    let data = resolve_path(data, &cfg.paths.data, "data")?;
    let out = resolve_path(out, &cfg.paths.learned, "learned")?;
    let text = fs::read_to_string(data)
        .map_err(|e| CliError::config(format!("cannot read {}: {e}", data.display())))?;
    let samples: Vec<Sample> = read_dataset_csv(text.as_bytes())
        .map_err(|e| CliError::config(format!("{}: {e}", data.display())))?;
    let known = cfg.known_dynamics()?;
    let residuals = build_residuals(&samples, cfg.modes.count, |mode, x| known[mode - 1].eval(x))
        .map_err(|e| CliError::config(e.to_string()))?;
    let modes = learn_modes(&residuals, &cfg.noise, &cfg.learn_options())
        .map_err(|e| CliError::numeric(e.to_string()))?;

    for m in &modes {
        let source = match m.bound_source {
            RkhsBoundSource::Heuristic => "heuristic-sound",
            RkhsBoundSource::Provided => "user-provided",
        };
        if cfg.learning.kernel_grid.is_some() {
            let k = m.fits[0].kernel();
            eprintln!(
                "learn: mode {} selected kernel by marginal likelihood: signal variance {}, length scales {:?}",
                m.mode, k.signal_variance, k.length_scales
            );
        }
        for (d, fit) in m.fits.iter().enumerate() {
            eprintln!(
                "learn: mode {} dim {} | samples {} | info gain {:.4} | norm bound {:.4} ({source}) | jitter {:e}",
                m.mode,
                d + 1,
                fit.len(),
                m.information_gain(d),
                m.rkhs_bounds[d],
                fit.jitter(),
            );
        }
    }
    let file = LearnedFile {
        noise: cfg.noise.clone(),
        modes: modes.iter().map(LearnedModeRecord::from_mode).collect(),
    };
    write_json(out, &file)?;
    eprintln!(
        "learn: {} fits ({} modes x {} dims) -> {}",
        modes.len() * modes[0].state_dim(),
        modes.len(),
        modes[0].state_dim(),
        out.display()
    );
    Ok(())
}

fn load_learned(path: &Path) -> Result<(NoiseModel, Vec<LearnedMode>), CliError> {
    let file: LearnedFile = read_json(path)?;
    let modes = file
        .modes
        .into_iter()
        .map(|r| r.into_mode().map_err(|e| CliError::numeric(e.to_string())))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((file.noise, modes))
}

pub fn abstract_system(
    config_path: &Path,
    learned_path: Option<&Path>,
    out: Option<&Path>,
    eta_fraction: Option<f64>,
) -> Result<(), CliError> {
    let cfg = RunConfig::load(config_path)?;
    let learned_path = resolve_path(learned_path, &cfg.paths.learned, "learned")?;
    let out = resolve_path(out, &cfg.paths.imdp, "imdp")?;
    let (noise, modes) = load_learned(learned_path)?;
    let partition = cfg.build_partition()?;
    let known = cfg.known_dynamics()?;
    let mut acfg = cfg.abstraction_config();
    if eta_fraction.is_some() {
        acfg.eta_fraction = eta_fraction;
    }
    let imdp = build_imdp(&partition, &known, &modes, &noise, &acfg)
        .map_err(|e| CliError::numeric(e.to_string()))?;
    report_imdp(&imdp);
    let clamps: u64 = modes
        .iter()
        .flat_map(|m| m.fits.iter())
        .map(|f| f.clamp_count())
        .sum();
    if clamps > 0 {
        eprintln!("abstract: {clamps} posterior variance evaluations clamped at zero");
    }
    write_json(out, &imdp)?;
    eprintln!("abstract: -> {}", out.display());
    Ok(())
}

fn report_imdp(imdp: &Imdp) {
    let meta = &imdp.meta;
    if let Some(eta) = &meta.eta {
        eprintln!(
            "abstract: eta = {:?}, joint noise coverage = {:.6}",
            eta.eta,
            eta.p_eta.iter().product::<f64>()
        );
    }
    eprintln!(
        "abstract: {} states, {} rows, {} explicit entries (mean width {:.4}, max {:.4})",
        imdp.num_states(),
        imdp.rows.len(),
        meta.explicit_entries,
        meta.mean_explicit_width,
        meta.max_explicit_width
    );
    eprintln!(
        "abstract: consistency repairs: {} rows rescaled lower bounds, {} rows raised the outside upper bound",
        meta.rows_lo_rescaled, meta.rows_hi_raised
    );
}

fn class_name(class: CellClass) -> &'static str {
    match class {
        CellClass::Yes => "yes",
        CellClass::No => "no",
        CellClass::Maybe => "maybe",
    }
}

pub fn synthesize(
    config_path: &Path,
    imdp_path: Option<&Path>,
    out: Option<&Path>,
    heatmap: Option<&Path>,
    dfa_table: Option<&Path>,
) -> Result<(), CliError> {
    let cfg = RunConfig::load(config_path)?;
    let imdp_path = resolve_path(imdp_path, &cfg.paths.imdp, "imdp")?;
    let out = resolve_path(out, &cfg.paths.result, "result")?;
    let imdp: Imdp = read_json(imdp_path)?;
    let ap = cfg.ap();
    let formula = parse(&cfg.formula.text, Some(&ap))
        .map_err(|e| CliError::config(format!("formula: {e}")))?;
    let dfa = to_dfa(&formula, &ap, cfg.synthesis.dfa_state_budget)
        .map_err(|e| CliError::numeric(e.to_string()))?;
    eprintln!(
        "synthesize: automaton has {} states over {} propositions",
        dfa.num_states(),
        ap.len()
    );
    let partition = imdp.partition.clone();
    let pimdp = Pimdp::build(imdp, dfa.clone()).map_err(|e| CliError::config(e.to_string()))?;
    let opts = IviOptions {
        tol: cfg.synthesis.tol,
        max_sweeps: cfg.synthesis.max_sweeps,
        init: None,
    };
    let result = synthesis::synthesize(&pimdp, cfg.formula.threshold, &opts)
        .map_err(|e| CliError::numeric(e.to_string()))?;

    let (mut yes, mut no, mut maybe) = (0usize, 0usize, 0usize);
    for c in &result.cells {
        match c.class {
            CellClass::Yes => yes += 1,
            CellClass::No => no += 1,
            CellClass::Maybe => maybe += 1,
        }
    }
    eprintln!(
        "synthesize: {} yes / {} no / {} maybe at threshold {}",
        yes, no, maybe, cfg.formula.threshold
    );

    if let Some(path) = heatmap {
        write_text(path, &heatmap_csv(&partition, &result.cells))?;
    }
    if let Some(path) = dfa_table {
        write_text(path, &dfa.to_table())?;
    }
    let file = ResultFile {
        formula: cfg.formula.text.clone(),
        ap,
        threshold: cfg.formula.threshold,
        partition,
        dfa,
        strategy: result.strategy,
        lower: result.lower,
        upper: result.upper,
        upper_opt: result.upper_opt,
        cells: result.cells,
    };
    write_json(out, &file)?;
    eprintln!("synthesize: -> {}", out.display());
    Ok(())
}

fn heatmap_csv(partition: &Partition, cells: &[CellOutcome]) -> String {
    let n = partition.domain().dim();
    let mut out = String::new();
    for i in 1..=n {
        out.push_str(&format!("x{i},"));
    }
    out.push_str("lower,upper,upper_opt,gap,class\n");
    for c in cells {
        let center = partition.cell(c.cell).center();
        for v in &center {
            out.push_str(&format!("{v},"));
        }
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            c.lower,
            c.upper,
            c.upper_opt,
            c.gap,
            class_name(c.class)
        ));
    }
    out
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CellValidation {
    pub cell: usize,
    pub center: Vec<f64>,
    pub class: CellClass,
    pub lower: f64,
    pub upper: f64,
    pub rate: f64,
    pub wilson_low: f64,
    pub wilson_high: f64,
    pub consistent: bool,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ValidationReport {
    pub scenario: String,
    pub trials_per_cell: usize,
    pub max_steps: usize,
    pub seed: u64,
    pub confidence_budget: f64,
    pub cells: Vec<CellValidation>,
    pub consistent_cells: usize,
}

fn select_cells(spec: &str, cells: &[CellOutcome], seed: u64) -> Result<Vec<usize>, CliError> {
    if let Some((class_name_str, count)) = spec.split_once(':') {
        let want = match class_name_str {
            "yes" => CellClass::Yes,
            "no" => CellClass::No,
            "maybe" => CellClass::Maybe,
            other => {
                return Err(CliError::config(format!(
                    "unknown class {other:?} in --cells (use yes/no/maybe)"
                )))
            }
        };
        let count: usize = count
            .parse()
            .map_err(|e| CliError::config(format!("--cells count: {e}")))?;
        let mut pool: Vec<usize> = cells
            .iter()
            .filter(|c| c.class == want)
            .map(|c| c.cell)
            .collect();
        if pool.is_empty() {
            return Err(CliError::config(format!(
                "no cells classified {class_name_str:?} to validate"
            )));
        }
        // seeded partial shuffle for a deterministic pick
        let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(seed, 0xCE11));
        let k = count.min(pool.len());
        for i in 0..k {
            let j = rng.random_range(i..pool.len());
            pool.swap(i, j);
        }
        pool.truncate(k);
        pool.sort_unstable();
        Ok(pool)
    } else {
        spec.split(',')
            .map(|s| {
                s.trim()
                    .parse::<usize>()
                    .map_err(|e| CliError::config(format!("--cells index {s:?}: {e}")))
            })
            .collect()
    }
}

#[allow(clippy::too_many_arguments)]
pub fn validate(
    config_path: &Path,
    scenario_name: &str,
    result_path: Option<&Path>,
    cells_spec: &str,
    trials: Option<usize>,
    seed: Option<u64>,
    out: Option<&Path>,
    traces_dir: Option<&Path>,
) -> Result<(), CliError> {
    let cfg = RunConfig::load(config_path)?;
    let result_path = resolve_path(result_path, &cfg.paths.result, "result")?;
    let out = resolve_path(out, &cfg.paths.report, "report")?;
    let scenario = Scenario::parse(scenario_name)?;
    let result: ResultFile = read_json(result_path)?;
    let trials = trials.unwrap_or(cfg.validation.trials);
    let seed = seed.unwrap_or(cfg.seeds.validation);
    let max_steps = cfg.validation.max_steps;
    let budget = cfg.validation.confidence_budget;
    let truth = scenario.truth();

    let picked = select_cells(cells_spec, &result.cells, seed)?;
    let mut report = ValidationReport {
        scenario: scenario_name.to_string(),
        trials_per_cell: trials,
        max_steps,
        seed,
        confidence_budget: budget,
        cells: Vec::with_capacity(picked.len()),
        consistent_cells: 0,
    };
    for &cell in &picked {
        let outcome = result
            .cells
            .iter()
            .find(|c| c.cell == cell)
            .ok_or_else(|| CliError::config(format!("cell {cell} out of range")))?;
        let center = result.partition.cell(cell).center();
        let mc: McReport = monte_carlo(
            truth.as_ref(),
            &result.partition,
            &result.dfa,
            &result.strategy,
            &center,
            trials,
            max_steps,
            trial_seed(seed, cell as u64),
        )
        .map_err(|e| CliError::numeric(e.to_string()))?;
        let consistent = !mc.inconsistent_with(outcome.lower, outcome.upper, budget);
        report.consistent_cells += usize::from(consistent);
        eprintln!(
            "validate: cell {cell} ({}) lower {:.4} upper {:.4} | rate {:.4} wilson [{:.4}, {:.4}] | {}",
            class_name(outcome.class),
            outcome.lower,
            outcome.upper,
            mc.rate,
            mc.wilson_low,
            mc.wilson_high,
            if consistent { "consistent" } else { "INCONSISTENT" }
        );
        if let Some(dir) = traces_dir {
            let t = simulate(
                truth.as_ref(),
                &result.partition,
                &result.dfa,
                &result.strategy,
                &center,
                max_steps,
                trial_seed(trial_seed(seed, cell as u64), 0),
            )
            .map_err(|e| CliError::numeric(e.to_string()))?;
            write_text(&dir.join(format!("cell_{cell}_trial0.csv")), &t.to_csv())?;
        }
        report.cells.push(CellValidation {
            cell,
            center,
            class: outcome.class,
            lower: outcome.lower,
            upper: outcome.upper,
            rate: mc.rate,
            wilson_low: mc.wilson_low,
            wilson_high: mc.wilson_high,
            consistent,
        });
    }
    eprintln!(
        "validate: {}/{} cells consistent with their probability intervals",
        report.consistent_cells,
        report.cells.len()
    );
    write_json(out, &report)?;
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SweepRow {
    pub fraction: f64,
    pub eta: Vec<f64>,
    pub joint_noise_coverage: f64,
    pub mean_lower: f64,
    pub yes_cells: usize,
}

pub fn sweep_eta(
    config_path: &Path,
    learned_path: Option<&Path>,
    fractions: &str,
    out_dir: &Path,
) -> Result<(), CliError> {
    let cfg = RunConfig::load(config_path)?;
    let learned_path = resolve_path(learned_path, &cfg.paths.learned, "learned")?;
    let (noise, modes) = load_learned(learned_path)?;
    let partition = cfg.build_partition()?;
    let known = cfg.known_dynamics()?;
    let ap = cfg.ap();
    let formula = parse(&cfg.formula.text, Some(&ap))
        .map_err(|e| CliError::config(format!("formula: {e}")))?;
    let dfa = to_dfa(&formula, &ap, cfg.synthesis.dfa_state_budget)
        .map_err(|e| CliError::numeric(e.to_string()))?;
    let opts = IviOptions {
        tol: cfg.synthesis.tol,
        max_sweeps: cfg.synthesis.max_sweeps,
        init: None,
    };

    let fracs: Vec<f64> = fractions
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| CliError::config(format!("--fractions {s:?}: {e}")))
        })
        .collect::<Result<Vec<_>, _>>()?;

    fs::create_dir_all(out_dir)?;
    let mut rows: Vec<SweepRow> = Vec::with_capacity(fracs.len());
    let mut csv = String::from("fraction,eta,joint_noise_coverage,mean_lower,yes_cells\n");
    for &fraction in &fracs {
        let mut acfg = cfg.abstraction_config();
        acfg.eta_fraction = Some(fraction);
        let imdp = build_imdp(&partition, &known, &modes, &noise, &acfg)
            .map_err(|e| CliError::numeric(e.to_string()))?;
        let eta = imdp
            .meta
            .eta
            .clone()
            .expect("built abstraction records eta");
        let pimdp = Pimdp::build(imdp, dfa.clone()).map_err(|e| CliError::config(e.to_string()))?;
        let result = synthesis::synthesize(&pimdp, cfg.formula.threshold, &opts)
            .map_err(|e| CliError::numeric(e.to_string()))?;
        let mean_lower =
            result.cells.iter().map(|c| c.lower).sum::<f64>() / result.cells.len() as f64;
        let yes_cells = result
            .cells
            .iter()
            .filter(|c| c.class == CellClass::Yes)
            .count();
        let coverage: f64 = eta.p_eta.iter().product();
        eprintln!(
            "sweep-eta: fraction {fraction} | coverage {coverage:.6} | mean lower {mean_lower:.6} | yes {yes_cells}"
        );
        csv.push_str(&format!(
            "{fraction},{:?},{coverage},{mean_lower},{yes_cells}\n",
            eta.eta[0]
        ));
        write_json(
            &out_dir.join(format!("result_eta_{fraction}.json")),
            &result.cells,
        )?;
        rows.push(SweepRow {
            fraction,
            eta: eta.eta,
            joint_noise_coverage: coverage,
            mean_lower,
            yes_cells,
        });
    }
    write_text(&out_dir.join("sweep.csv"), &csv)?;
    write_json(&out_dir.join("sweep.json"), &rows)?;
    Ok(())
}
