//! Command-line front end: argument parsing, dispatch and file output.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::chargecorr::{madelung_correction, EwaldError};
use crate::dataset::{Dataset, DatasetError};
use crate::report::{emit_svg_diagram, Cell, CsvTable, Diagram, FormationDiagram, LevelsDiagram, RunManifest, SvgError};
use crate::spinham::{
    build_hamiltonian_with, diagonalize, transition_table, zeeman_sweep, HamiltonianOptions,
    SpinError, SweepOptions, TransitionFilter, ZfsConvention,
};
use crate::stark::{effective_field, fit_stark, StarkError, DEFAULT_SHIELDING, DEFAULT_Z_SCALE_A};
use crate::symmetry::{changed_channel, classify_transitions, SpinChannel, SymmetryError};
use crate::thermo::{analyze, ThermoError};
use crate::units::{e_angstrom_to_debye, ev_to_nm, polarizability_to_bohr_cubed};

pub const THREADS_ENV: &str = "DEFECT_SPECTRO_THREADS";

#[derive(Debug, Parser)]
#[command(name = "defect-spectro", version, about = "Point-defect thermodynamics, spin levels and Stark analysis")]
#[command(arg_required_else_help = true)]
pub struct Cli {
    /// Dataset JSON file.
    #[arg(short = 'i', long = "input", global = true)]
    pub input: Option<PathBuf>,
    /// Directory for CSV, SVG and manifest output.
    #[arg(short = 'o', long = "outdir", global = true)]
    pub outdir: Option<PathBuf>,
    /// Write the CSV tables to standard output.
    #[arg(long, global = true)]
    pub stdout: bool,
    /// Only report errors on standard error.
    #[arg(long, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Formation lines, charge transition levels and stability maps.
    Thermo,
    /// Madelung correction for a charged cubic supercell.
    Correction(CorrectionArgs),
    /// Spin-Hamiltonian levels at one field or along a sweep.
    Levels(LevelsArgs),
    /// C2v dipole selection rules for the orbital configurations.
    Selection(SelectionArgs),
    /// Stark fits and effective internal fields.
    Stark(StarkArgs),
    /// Every analysis in one run.
    All(AllArgs),
}

#[derive(Debug, Args)]
pub struct CorrectionArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub charge: Option<i32>,
    /// Cubic cell edge, Å (default: host value).
    #[arg(long = "cell-length")]
    pub cell_length: Option<f64>,
    /// Static dielectric constant (default: host value).
    #[arg(long)]
    pub epsilon: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    fn vector(self) -> [f64; 3] {
        match self {
            Axis::X => [1.0, 0.0, 0.0],
            Axis::Y => [0.0, 1.0, 0.0],
            Axis::Z => [0.0, 0.0, 1.0],
        }
    }

    fn name(self) -> &'static str {
        match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ZfsArg {
    Ladder,
    Conventional,
}

impl From<ZfsArg> for ZfsConvention {
    fn from(z: ZfsArg) -> Self {
        match z {
            ZfsArg::Ladder => ZfsConvention::Ladder,
            ZfsArg::Conventional => ZfsConvention::Conventional,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FilterArg {
    SpinConserving,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sweep {
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
}

impl Sweep {
    /// `steps` intervals, `steps + 1` field points.
    pub fn points(&self) -> Vec<f64> {
        (0..=self.steps)
            .map(|k| {
                if k == self.steps {
                    self.stop
                } else {
                    self.start + (self.stop - self.start) * k as f64 / self.steps as f64
                }
            })
            .collect()
    }
}

fn parse_sweep(s: &str) -> Result<Sweep, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [a, b, n] = parts.as_slice() else {
        return Err("expected start:stop:steps".into());
    };
    let start: f64 = a.parse().map_err(|_| format!("bad start '{a}'"))?;
    let stop: f64 = b.parse().map_err(|_| format!("bad stop '{b}'"))?;
    let steps: usize = n.parse().map_err(|_| format!("bad step count '{n}'"))?;
    if !(start.is_finite() && stop.is_finite()) || stop < start {
        return Err("need finite start <= stop".into());
    }
    if steps == 0 {
        return Err("step count must be at least 1".into());
    }
    Ok(Sweep { start, stop, steps })
}

#[derive(Debug, Args)]
pub struct LevelsArgs {
    /// Spin system label.
    #[arg(long)]
    pub system: String,
    /// Field magnitude, T.
    #[arg(long = "B", default_value_t = 0.0, allow_hyphen_values = true)]
    pub b: f64,
    #[arg(long, value_enum, default_value_t = Axis::Z)]
    pub axis: Axis,
    /// Field sweep start:stop:steps in T (steps intervals).
    #[arg(long, value_parser = parse_sweep)]
    pub sweep: Option<Sweep>,
    /// Use the reduced diagonal Hamiltonian.
    #[arg(long)]
    pub effective: bool,
    #[arg(long = "zfs-convention", value_enum, default_value_t = ZfsArg::Ladder)]
    pub zfs_convention: ZfsArg,
    /// Excited-state spin system for an optical transition table.
    #[arg(long, requires = "zpl")]
    pub excited: Option<String>,
    /// Zero-phonon line, eV.
    #[arg(long, requires = "excited")]
    pub zpl: Option<f64>,
    #[arg(long, value_enum, default_value_t = FilterArg::SpinConserving)]
    pub transitions: FilterArg,
}

#[derive(Debug, Args)]
pub struct SelectionArgs {
    /// Spin channel of the promotions (default: detected per pair).
    #[arg(long)]
    pub channel: Option<SpinChannel>,
}

#[derive(Debug, Args)]
pub struct StarkArgs {
    /// Stark series label (default: every series).
    #[arg(long)]
    pub system: Option<String>,
    /// Static dielectric constant (default: host value).
    #[arg(long = "epsilon-s")]
    pub epsilon_s: Option<f64>,
    /// Length scale for the effective field, Å.
    #[arg(long = "z-scale", default_value_t = DEFAULT_Z_SCALE_A)]
    pub z_scale: f64,
    #[arg(long, default_value_t = DEFAULT_SHIELDING)]
    pub shielding: f64,
}

#[derive(Debug, Args)]
pub struct AllArgs {
    /// Field sweep used for every spin system.
    #[arg(long, value_parser = parse_sweep, default_value = "0:1:50")]
    pub sweep: Sweep,
    #[arg(long = "zfs-convention", value_enum, default_value_t = ZfsArg::Ladder)]
    pub zfs_convention: ZfsArg,
    #[arg(long = "z-scale", default_value_t = DEFAULT_Z_SCALE_A)]
    pub z_scale: f64,
    #[arg(long, default_value_t = DEFAULT_SHIELDING)]
    pub shielding: f64,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Thermo(#[from] ThermoError),
    #[error(transparent)]
    Correction(#[from] EwaldError),
    #[error(transparent)]
    Spin(#[from] SpinError),
    #[error(transparent)]
    Symmetry(#[from] SymmetryError),
    #[error(transparent)]
    Stark(#[from] StarkError),
    #[error(transparent)]
    Svg(#[from] SvgError),
    #[error("{0}")]
    Invalid(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}

/// Files produced by one run, keyed by name so output order is fixed.
#[derive(Debug, Default)]
struct Outputs {
    files: BTreeMap<String, String>,
}

impl Outputs {
    fn add(&mut self, name: String, content: String) {
        self.files.insert(name, content);
    }
}

fn file_stem(label: &str) -> String {
    label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '.' { c } else { '_' })
        .collect()
}

struct Context {
    dataset: Option<Dataset>,
    manifest: RunManifest,
}

impl Context {
    fn dataset(&self) -> Result<&Dataset, CliError> {
        self.dataset
            .as_ref()
            .ok_or_else(|| CliError::Usage("this subcommand needs a dataset: pass -i/--input".into()))
    }
}

fn thermo(ctx: &mut Context, out: &mut Outputs) -> Result<(), CliError> {
    let d = ctx.dataset()?;
    let results = analyze(d)?;
    let gap = d.host.band_gap_ev;
    let mut lines_csv = CsvTable::new(&["label", "q", "intercept_eV", "slope"]);
    let mut ctl_csv = CsvTable::new(&["label", "q1", "q2", "level_eV"]);
    let mut stab_csv = CsvTable::new(&["label", "from_eV", "to_eV", "q"]);
    for r in &results {
        for l in &r.lines {
            lines_csv.push(vec![l.label.as_str().into(), l.charge.into(), l.intercept_ev.into(), l.slope().into()]);
        }
        for t in &r.transition_levels {
            ctl_csv.push(vec![r.label.as_str().into(), t.q1.into(), t.q2.into(), t.level_ev.into()]);
        }
        for iv in &r.stability.intervals {
            stab_csv.push(vec![r.label.as_str().into(), iv.from_ev.into(), iv.to_ev.into(), iv.charge.into()]);
        }
        let svg = emit_svg_diagram(&Diagram::Formation(FormationDiagram {
            title: format!("{} formation energy", r.label),
            gap_ev: gap,
            lines: r.lines.clone(),
            stability: Some(r.stability.clone()),
        }))?;
        out.add(format!("formation_{}.svg", file_stem(&r.label)), svg);
    }
    out.add("formation_lines.csv".into(), lines_csv.render());
    out.add("transition_levels.csv".into(), ctl_csv.render());
    out.add("stability.csv".into(), stab_csv.render());
    Ok(())
}

fn correction(ctx: &mut Context, args: &CorrectionArgs, out: &mut Outputs) -> Result<(), CliError> {
    let host = ctx.dataset.as_ref().map(|d| d.host);
    let length = args
        .cell_length
        .or(host.map(|h| h.cubic_cell_length_a))
        .ok_or_else(|| CliError::Usage("--cell-length is required without a dataset".into()))?;
    let epsilon = args
        .epsilon
        .or(host.map(|h| h.dielectric_constant))
        .ok_or_else(|| CliError::Usage("--epsilon is required without a dataset".into()))?;
    ctx.manifest.set("cell_length_A", length);
    ctx.manifest.set("epsilon", epsilon);

    let mut table = CsvTable::new(&["label", "q", "cell_length_A", "epsilon", "madelung_constant", "correction_eV"]);
    match (args.charge, &ctx.dataset) {
        (Some(q), _) => {
            ctx.manifest.set("charge", q);
            let m = madelung_correction(q, length, epsilon)?;
            println!("E_corr = {} eV (nu = {})", crate::report::fmt_g12(m.energy_ev), crate::report::fmt_g12(m.madelung_constant));
            table.push(vec!["".into(), q.into(), length.into(), epsilon.into(), m.madelung_constant.into(), m.energy_ev.into()]);
        }
        (None, Some(d)) => {
            let mut keys: Vec<(&str, i32)> = d.defects.iter().map(|e| (e.label.as_str(), e.charge)).collect();
            keys.sort_by(|a, b| a.0.cmp(b.0).then(b.1.cmp(&a.1)));
            for (label, q) in keys {
                let m = madelung_correction(q, length, epsilon)?;
                table.push(vec![label.into(), q.into(), length.into(), epsilon.into(), m.madelung_constant.into(), m.energy_ev.into()]);
            }
        }
        (None, None) => return Err(CliError::Usage("--charge is required without a dataset".into())),
    }
    out.add("correction.csv".into(), table.render());
    Ok(())
}

struct LevelRequest<'a> {
    system: &'a str,
    axis: Axis,
    fields: Vec<f64>,
    effective: bool,
    convention: ZfsConvention,
}

fn levels_for(d: &Dataset, req: &LevelRequest, out: &mut Outputs) -> Result<(), CliError> {
    let params = d
        .spin_system(req.system)
        .ok_or_else(|| CliError::Invalid(format!("unknown spin system '{}'", req.system)))?;
    let options = SweepOptions {
        effective: req.effective,
        hamiltonian: HamiltonianOptions {
            zfs_convention: req.convention,
        },
    };
    let sweep = zeeman_sweep(params, req.axis.vector(), &req.fields, &options)?;
    let mut table = CsvTable::new(&["B_T", "index", "energy_MHz", "m_S", "m_I", "branch"]);
    let mut branch_of = vec![vec![0usize; sweep.n_branches()]; sweep.fields_t.len()];
    for (b, br) in sweep.branches.iter().enumerate() {
        for (t, &k) in br.iter().enumerate() {
            branch_of[t][k] = b;
        }
    }
    for (t, diag) in sweep.diagrams.iter().enumerate() {
        for (k, (&e, lab)) in diag.eigenvalues_mhz.iter().zip(&diag.labels).enumerate() {
            table.push(vec![
                sweep.fields_t[t].into(),
                k.into(),
                e.into(),
                lab.ms().into(),
                lab.mi().into(),
                branch_of[t][k].into(),
            ]);
        }
    }
    let suffix = if req.effective { "_effective" } else { "" };
    let stem = format!("levels_{}{}", file_stem(req.system), suffix);
    out.add(format!("{stem}.csv"), table.render());
    let svg = emit_svg_diagram(&Diagram::Levels(LevelsDiagram {
        title: format!("{} levels, B along {}", req.system, req.axis.name()),
        fields_t: sweep.fields_t.clone(),
        branches: (0..sweep.n_branches()).map(|b| sweep.branch_energies_mhz(b)).collect(),
    }))?;
    out.add(format!("{stem}.svg"), svg);
    Ok(())
}

fn transitions_for(
    d: &Dataset,
    ground: &str,
    excited: &str,
    b_t: [f64; 3],
    zpl_ev: f64,
    convention: ZfsConvention,
    filter: TransitionFilter,
    out: &mut Outputs,
) -> Result<(), CliError> {
    let lookup = |s: &str| d.spin_system(s).ok_or_else(|| CliError::Invalid(format!("unknown spin system '{s}'")));
    let opts = HamiltonianOptions { zfs_convention: convention };
    let g = diagonalize(&build_hamiltonian_with(lookup(ground)?, b_t, &opts)?)?;
    let e = diagonalize(&build_hamiltonian_with(lookup(excited)?, b_t, &opts)?)?;
    let mut table = CsvTable::new(&[
        "lower_index",
        "upper_index",
        "m_S_lower",
        "m_I_lower",
        "m_S_upper",
        "m_I_upper",
        "energy_eV",
        "wavelength_nm",
    ]);
    for l in transition_table(&g, &e, zpl_ev, filter) {
        table.push(vec![
            l.lower_index.into(),
            l.upper_index.into(),
            l.lower.ms().into(),
            l.lower.mi().into(),
            l.upper.ms().into(),
            l.upper.mi().into(),
            l.energy_ev.into(),
            l.wavelength_nm.into(),
        ]);
    }
    out.add(format!("transitions_{}_{}.csv", file_stem(ground), file_stem(excited)), table.render());
    Ok(())
}

fn levels(ctx: &mut Context, args: &LevelsArgs, out: &mut Outputs) -> Result<(), CliError> {
    if !args.b.is_finite() {
        return Err(CliError::Usage("--B must be finite".into()));
    }
    let fields = args.sweep.map_or_else(|| vec![args.b], |s| s.points());
    let convention: ZfsConvention = args.zfs_convention.into();
    {
        let m = &mut ctx.manifest;
        m.set("system", &args.system);
        m.set("axis", args.axis.name());
        m.set("effective", args.effective);
        m.set("zfs_convention", convention);
        match args.sweep {
            Some(s) => m.set("sweep", format!("{}:{}:{}", s.start, s.stop, s.steps)),
            None => m.set("B_T", args.b),
        }
    }
    let d = ctx.dataset()?;
    levels_for(
        d,
        &LevelRequest {
            system: &args.system,
            axis: args.axis,
            fields,
            effective: args.effective,
            convention,
        },
        out,
    )?;
    if let (Some(excited), Some(zpl)) = (&args.excited, args.zpl) {
        let b = args.axis.vector().map(|a| a * args.b);
        let filter = match args.transitions {
            FilterArg::SpinConserving => TransitionFilter::SpinConserving,
            FilterArg::All => TransitionFilter::All,
        };
        transitions_for(d, &args.system, excited, b, zpl, convention, filter, out)?;
        ctx.manifest.set("excited", excited);
        ctx.manifest.set("zpl_eV", zpl);
        ctx.manifest.set("transitions", format!("{:?}", args.transitions));
    }
    Ok(())
}

fn selection(ctx: &mut Context, args: &SelectionArgs, out: &mut Outputs) -> Result<(), CliError> {
    if let Some(c) = args.channel {
        ctx.manifest.set("channel", c);
    }
    let d = ctx.dataset()?;
    let mut groups: Vec<((String, i32), Vec<&crate::dataset::OrbitalState>)> = Vec::new();
    for s in &d.orbital_states {
        let key = (s.label.clone(), s.charge);
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, v)) => v.push(s),
            None => groups.push((key, vec![s])),
        }
    }
    let mut table = CsvTable::new(&[
        "label",
        "charge",
        "ground",
        "excited",
        "channel",
        "ground_irrep",
        "excited_irrep",
        "ground_multiplicity",
        "excited_multiplicity",
        "from_orbital",
        "to_orbital",
        "polarizations",
        "allowed",
        "zpl_eV",
        "zpl_nm",
    ]);
    for ((label, charge), states) in groups {
        let ground = states.iter().find(|s| s.state == "ground").copied().unwrap_or(states[0]);
        for excited in states.iter().filter(|s| !std::ptr::eq(**s, ground)) {
            let Some(channel) = args.channel.or_else(|| changed_channel(&ground.configuration, &excited.configuration))
            else {
                continue;
            };
            let configs = [
                (ground.state.clone(), ground.configuration.clone()),
                (excited.state.clone(), excited.configuration.clone()),
            ];
            for v in classify_transitions(&configs, channel)? {
                let pols: Vec<String> = v.polarizations.iter().map(|p| p.to_string()).collect();
                table.push(vec![
                    label.as_str().into(),
                    charge.into(),
                    v.ground_label.into(),
                    v.excited_label.into(),
                    v.channel.to_string().into(),
                    v.ground_irrep.to_string().into(),
                    v.excited_irrep.to_string().into(),
                    v.ground_multiplicity.into(),
                    v.excited_multiplicity.into(),
                    v.from_orbital.into(),
                    v.to_orbital.into(),
                    if pols.is_empty() { "none".to_string() } else { pols.join(" ") }.into(),
                    if v.polarizations.is_empty() { "no" } else { "yes" }.into(),
                    excited.zpl_ev.map_or(Cell::Text(String::new()), Cell::from),
                    excited.zpl_ev.map_or(Cell::Text(String::new()), |z| Cell::from(ev_to_nm(z))),
                ]);
            }
        }
    }
    out.add("selection.csv".into(), table.render());
    Ok(())
}

fn stark(ctx: &mut Context, system: Option<&str>, epsilon_s: Option<f64>, z: f64, shielding: f64, out: &mut Outputs) -> Result<(), CliError> {
    let d = ctx.dataset()?;
    let eps = epsilon_s.unwrap_or(d.host.dielectric_constant);
    let series: Vec<_> = match system {
        Some(s) => vec![d
            .stark_series
            .get(s)
            .ok_or_else(|| CliError::Invalid(format!("unknown Stark series '{s}'")))?],
        None => d.stark_series.values().collect(),
    };
    let mut table = CsvTable::new(&[
        "label",
        "n_points",
        "delta_mu_eA",
        "delta_mu_D",
        "delta_alpha_A2e_per_V",
        "delta_alpha_a0_3",
        "residual_rms_eV",
        "cov_mu_mu",
        "cov_mu_alpha",
        "cov_alpha_alpha",
        "E_eff_GV_per_cm",
        "zpl0_eV",
        "zpl0_nm",
    ]);
    for s in series {
        let f = fit_stark(s, eps)?;
        let e_eff = effective_field(f.delta_mu, z, shielding)?;
        table.push(vec![
            s.label.as_str().into(),
            f.n_points.into(),
            f.delta_mu.into(),
            e_angstrom_to_debye(f.delta_mu).into(),
            f.delta_alpha.into(),
            polarizability_to_bohr_cubed(f.delta_alpha).into(),
            f.residual_rms.into(),
            f.covariance[0][0].into(),
            f.covariance[0][1].into(),
            f.covariance[1][1].into(),
            e_eff.into(),
            s.zpl0_ev.into(),
            ev_to_nm(s.zpl0_ev).into(),
        ]);
    }
    let m = &mut ctx.manifest;
    m.set("epsilon_s", eps);
    m.set("z_scale_A", z);
    m.set("shielding", shielding);
    if let Some(s) = system {
        m.set("stark_system", s);
    }
    out.add("stark_fit.csv".into(), table.render());
    Ok(())
}

fn all(ctx: &mut Context, args: &AllArgs, out: &mut Outputs) -> Result<(), CliError> {
    thermo(ctx, out)?;
    correction(
        ctx,
        &CorrectionArgs {
            charge: None,
            cell_length: None,
            epsilon: None,
        },
        out,
    )?;
    let convention: ZfsConvention = args.zfs_convention.into();
    let d = ctx.dataset()?;
    for system in d.spin_systems.keys() {
        for effective in [false, true] {
            let req = LevelRequest {
                system,
                axis: Axis::Z,
                fields: args.sweep.points(),
                effective,
                convention,
            };
            levels_for(d, &req, out)?;
        }
    }
    selection(ctx, &SelectionArgs { channel: None }, out)?;
    stark(ctx, None, None, args.z_scale, args.shielding, out)?;
    let m = &mut ctx.manifest;
    m.set("sweep", format!("{}:{}:{}", args.sweep.start, args.sweep.stop, args.sweep.steps));
    m.set("zfs_convention", convention);
    Ok(())
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("{THREADS_ENV} must be a non-negative integer, got '{raw}'")))?;
    if n > 0 {
        // A pool may already exist when run() is called more than once in a process.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

fn write_outputs(dir: &Path, out: &Outputs, manifest: &RunManifest) -> Result<(), CliError> {
    let io = |path: &Path| {
        let path = path.display().to_string();
        move |source| CliError::Io { path, source }
    };
    fs::create_dir_all(dir).map_err(io(dir))?;
    for (name, content) in &out.files {
        let p = dir.join(name);
        fs::write(&p, content).map_err(io(&p))?;
    }
    let p = dir.join("manifest.json");
    fs::write(&p, manifest.to_json()).map_err(io(&p))?;
    Ok(())
}

fn execute(cli: &Cli) -> Result<(), CliError> {
    configure_threads()?;
    let (name, needs_data) = match &cli.command {
        Command::Thermo => ("thermo", true),
        Command::Correction(_) => ("correction", false),
        Command::Levels(_) => ("levels", true),
        Command::Selection(_) => ("selection", true),
        Command::Stark(_) => ("stark", true),
        Command::All(_) => ("all", true),
    };
    let mut manifest = RunManifest::new(name);
    let dataset = match &cli.input {
        Some(path) => {
            let bytes = fs::read(path).map_err(|source| CliError::Io {
                path: path.display().to_string(),
                source,
            })?;
            let text = String::from_utf8(bytes.clone())
                .map_err(|_| CliError::Invalid(format!("{}: input is not UTF-8", path.display())))?;
            let d = Dataset::from_json_str(&text)?;
            manifest = manifest.with_input(&path.display().to_string(), &bytes);
            Some(d)
        }
        None if needs_data => return Err(CliError::Usage(format!("'{name}' needs -i/--input <dataset.json>"))),
        None => None,
    };
    let mut ctx = Context { dataset, manifest };
    let mut out = Outputs::default();
    match &cli.command {
        Command::Thermo => thermo(&mut ctx, &mut out)?,
        Command::Correction(a) => correction(&mut ctx, a, &mut out)?,
        Command::Levels(a) => levels(&mut ctx, a, &mut out)?,
        Command::Selection(a) => selection(&mut ctx, a, &mut out)?,
        Command::Stark(a) => stark(&mut ctx, a.system.as_deref(), a.epsilon_s, a.z_scale, a.shielding, &mut out)?,
        Command::All(a) => all(&mut ctx, a, &mut out)?,
    }
    ctx.manifest.outputs = out.files.keys().cloned().collect();

    if cli.stdout || cli.outdir.is_none() {
        let stdout = std::io::stdout();
        let mut lock = stdout.lock();
        for (name, content) in out.files.iter().filter(|(n, _)| n.ends_with(".csv")) {
            let _ = writeln!(lock, "# {name}");
            let _ = lock.write_all(content.as_bytes());
        }
    }
    if let Some(dir) = &cli.outdir {
        write_outputs(dir, &out, &ctx.manifest)?;
        log::info!("wrote {} files to {}", out.files.len() + 1, dir.display());
    }
    Ok(())
}

/// Parses `argv` (program name first), runs the subcommand and returns the
/// process exit code: 0 success, 1 invalid data, 2 usage error.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let level = if cli.quiet { log::LevelFilter::Error } else { log::LevelFilter::Warn };
    let _ = env_logger::Builder::new().filter_level(level).format_timestamp(None).try_init();
    log::set_max_level(level);
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_parsing() {
        let s = parse_sweep("0:1:4").unwrap();
        assert_eq!(s.points(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert!(parse_sweep("1:0:4").is_err());
        assert!(parse_sweep("0:1:0").is_err());
        assert!(parse_sweep("0:1").is_err());
    }

    #[test]
    fn usage_errors_exit_two() {
        assert_eq!(run(["defect-spectro"]), 2);
        assert_eq!(run(["defect-spectro", "bogus"]), 2);
        assert_eq!(run(["defect-spectro", "thermo"]), 2);
        assert_eq!(run(["defect-spectro", "correction", "--charge", "1"]), 2);
    }

    #[test]
    fn correction_without_dataset() {
        assert_eq!(
            run(["defect-spectro", "--quiet", "correction", "--charge", "-1", "--cell-length", "10", "--epsilon", "1"]),
            0
        );
    }
}
