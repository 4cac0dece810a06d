//! The `multitile` command-line front end: scheme validation, graph
//! analysis, patch generation, exact density evaluation, patch statistics
//! and SVG rendering.

use clap::{Parser, Subcommand};
use multitile::asymptotics::{beta_min, DensityModel, ScaleInterval};
use multitile::exact::{format_rational, parse_rational, Rational};
use multitile::flow::{
    find_stationary_anchors, generate, stationary_patch, supertile_decompose, FlowError,
    GenOptions, Patch, TimePoint,
};
use multitile::graph::{
    build_graph, classify_commensurability, is_irreducible, path_count_oracle,
    CommensurabilityVerdict, GraphError, DEFAULT_CYCLE_BUDGET,
};
use multitile::render::{render_1d, render_svg, ColorMode, RenderStyle};
use multitile::scheme::{bundled, normalize, parse_scheme, validate, Scheme};
use multitile::stats;
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

#[derive(Parser)]
#[command(name = "multitile", version, about = "Multiscale substitution tilings toolkit")]
struct Cli {
    /// Tile/state budget cap (also via MULTITILE_BUDGET).
    #[arg(long, global = true)]
    budget: Option<u64>,
    /// Worker threads for patch generation; never changes outputs.
    #[arg(long, global = true, default_value_t = 1)]
    workers: usize,
    /// Decimal digits for printed values.
    #[arg(long, global = true, default_value_t = 6)]
    precision: u32,
    /// Reserved; every algorithm in this toolkit is deterministic and no
    /// randomness is consumed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Write the run manifest to this file (always echoed to stderr).
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact validation report for a scheme file.
    Validate {
        scheme: PathBuf,
        /// Normalize before validating.
        #[arg(long)]
        normalize: bool,
    },
    /// Structure of the associated graph: edges, irreducibility,
    /// commensurability verdict, M(d) and Q.
    Graph {
        scheme: PathBuf,
        /// Write a Graphviz DOT rendition.
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// Generate the patch F_t(T_root) at an exact time t = ln(p/q).
    Generate {
        scheme: PathBuf,
        #[arg(long, default_value_t = 1)]
        root: usize,
        /// Time as "ln(p/q)"; bare floats select the diagnostic float mode.
        #[arg(long)]
        time: String,
        /// Patch binary output.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Exact asymptotic densities φ and ν for one type and scale window.
    Stats {
        scheme: PathBuf,
        #[arg(long = "type", default_value_t = 1)]
        ptype: usize,
        /// Scale window bounds, e.g. --interval 3/5 4/5.
        #[arg(long, num_args = 2)]
        interval: Vec<String>,
        #[arg(long)]
        json: bool,
    },
    /// Census of a patch file against (type, scale-window) cells.
    Census {
        patch: PathBuf,
        /// Cells as type:lo:hi, e.g. --cell 1:3/5:4/5 (repeatable); default
        /// is one full legal window per type.
        #[arg(long = "cell")]
        cells: Vec<String>,
        /// Scheme file (only needed when the patch is not from a bundled
        /// scheme).
        #[arg(long)]
        scheme: Option<PathBuf>,
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Tile complexity c(k) of a stationary tower.
    Complexity {
        scheme: PathBuf,
        #[arg(long, default_value_t = 1)]
        root: usize,
        /// Anchor period as "ln(p/q)"; default = the shortest anchor found.
        #[arg(long)]
        period: Option<String>,
        #[arg(long, default_value_t = 8)]
        kmax: usize,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Empirical counts against the exact rate at a list of exact times.
    Discrepancy {
        scheme: PathBuf,
        #[arg(long, default_value_t = 1)]
        root: usize,
        /// Times u = e^t as rationals, e.g. --times 5/3,25/9,5
        #[arg(long, value_delimiter = ',')]
        times: Vec<String>,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// L/N occurrence counts of a needle patch inside a haystack patch.
    Occurrences {
        haystack: PathBuf,
        #[arg(long)]
        needle: PathBuf,
        /// Carve the needle from the needle patch: x0 y0 x1 y1 (rationals).
        #[arg(long = "extract-box", num_args = 2..=4)]
        extract_box: Option<Vec<String>>,
        /// Dilation window, e.g. --dilation 1/2 1
        #[arg(long, num_args = 2)]
        dilation: Vec<String>,
        /// Query region box: x0 y0 x1 y1 (or x0 x1 in one dimension).
        #[arg(long, num_args = 2..=4)]
        region: Vec<String>,
        #[arg(long)]
        scheme: Option<PathBuf>,
    },
    /// Enumerate stationary anchors and optionally build a tower patch.
    Stationary {
        scheme: PathBuf,
        #[arg(long, default_value_t = 1)]
        root: usize,
        /// Horizon for the anchor search, as "ln(p/q)"; default ln(8).
        #[arg(long = "max-period")]
        max_period: Option<String>,
        /// Build stationary_patch(k) for the selected anchor.
        #[arg(long)]
        k: Option<usize>,
        /// Index into the reported anchor list.
        #[arg(long, default_value_t = 0)]
        anchor: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render a patch file to SVG.
    Render {
        patch: PathBuf,
        /// by-type | by-scale | by-supertile
        #[arg(long, default_value = "by-type")]
        style: String,
        /// Overlay order-m supertile boundaries (needs --period).
        #[arg(long)]
        supertiles: Option<usize>,
        /// Anchor period "ln(p/q)" for the supertile overlay.
        #[arg(long)]
        period: Option<String>,
        #[arg(long)]
        scheme: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Metric-path count of length ln(p/q) from a root vertex (the exact
    /// counterpart of a patch's tile count).
    Oracle {
        scheme: PathBuf,
        #[arg(long, default_value_t = 1)]
        root: usize,
        #[arg(long)]
        time: String,
    },
}

enum CliError {
    Budget(String),
    Validation,
    Other(String),
}

fn flow_err(e: FlowError) -> CliError {
    match &e {
        FlowError::BudgetExceeded(_) => CliError::Budget(e.to_string()),
        FlowError::Graph(GraphError::BudgetExceeded { .. }) => CliError::Budget(e.to_string()),
        _ => CliError::Other(e.to_string()),
    }
}

fn graph_err(e: GraphError) -> CliError {
    match &e {
        GraphError::BudgetExceeded { .. } => CliError::Budget(e.to_string()),
        _ => CliError::Other(e.to_string()),
    }
}

struct Manifest {
    command: Vec<String>,
    scheme_hash: Option<String>,
    budget: u64,
    workers: usize,
    precision: u32,
    outputs: Vec<(String, String)>,
    started: Instant,
}

impl Manifest {
    fn new(budget: u64, workers: usize, precision: u32) -> Self {
        Manifest {
            command: std::env::args().collect(),
            scheme_hash: None,
            budget,
            workers,
            precision,
            outputs: Vec::new(),
            started: Instant::now(),
        }
    }

    fn record_output(&mut self, path: &Path, bytes: &[u8]) {
        let mut hasher = Sha256::new();
        hasher.update(bytes);
        let digest = hasher.finalize();
        self.outputs.push((
            path.display().to_string(),
            digest.iter().map(|b| format!("{b:02x}")).collect(),
        ));
    }

    fn emit(&self, to_file: Option<&Path>) {
        let value = serde_json::json!({
            "command": self.command,
            "scheme_hash": self.scheme_hash,
            "budget": self.budget,
            "workers": self.workers,
            "precision": self.precision,
            "outputs": self.outputs.iter().map(|(p, h)| serde_json::json!({"path": p, "sha256": h})).collect::<Vec<_>>(),
            "wall_ms": self.started.elapsed().as_millis() as u64,
        });
        eprintln!("manifest: {value}");
        if let Some(path) = to_file {
            let _ = std::fs::write(path, serde_json::to_string_pretty(&value).unwrap());
        }
    }
}

fn load_scheme(path: &Path) -> Result<Scheme, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Other(format!("cannot read {}: {e}", path.display())))?;
    parse_scheme(&text).map_err(|e| CliError::Other(e.to_string()))
}

/// Resolves the scheme a patch was generated from: an explicit --scheme wins,
/// otherwise the patch's content hash is matched against the bundled set.
fn resolve_patch_scheme(patch: &Patch, explicit: Option<&PathBuf>) -> Result<Scheme, CliError> {
    if let Some(path) = explicit {
        let scheme = load_scheme(path)?;
        if scheme.content_hash() != patch.meta.scheme_hash {
            return Err(CliError::Other(format!(
                "scheme {} does not match the patch's scheme hash",
                path.display()
            )));
        }
        return Ok(scheme);
    }
    for scheme in bundled::all() {
        if scheme.content_hash() == patch.meta.scheme_hash {
            return Ok(scheme);
        }
    }
    Err(CliError::Other(format!(
        "patch references scheme {:?} which is not bundled; pass --scheme",
        patch.meta.scheme_name
    )))
}

fn parse_exact_u(s: &str) -> Result<Rational, CliError> {
    match TimePoint::parse(s).map_err(CliError::Other)? {
        TimePoint::Exact(u) => Ok(u),
        TimePoint::Float(_) => Err(CliError::Other(format!(
            "{s:?} is a float time; this operation needs an exact ln(p/q)"
        ))),
    }
}

fn parse_interval(lo: &str, hi: &str) -> Result<ScaleInterval, CliError> {
    let a = parse_rational(lo).map_err(|e| CliError::Other(e.to_string()))?;
    let b = parse_rational(hi).map_err(|e| CliError::Other(e.to_string()))?;
    ScaleInterval::new(a, b).map_err(|e| CliError::Other(e.to_string()))
}

fn read_patch_file(path: &Path) -> Result<Patch, CliError> {
    let bytes = std::fs::read(path)
        .map_err(|e| CliError::Other(format!("cannot read {}: {e}", path.display())))?;
    multitile::io::read_patch(&mut bytes.as_slice()).map_err(|e| CliError::Other(e.to_string()))
}

fn write_output(manifest: &mut Manifest, path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, bytes)
        .map_err(|e| CliError::Other(format!("cannot write {}: {e}", path.display())))?;
    manifest.record_output(path, bytes);
    Ok(())
}

fn verdict_line(verdict: &CommensurabilityVerdict) -> String {
    match verdict {
        CommensurabilityVerdict::Incommensurable { witness } => format!(
            "incommensurable (witness: {}, {})",
            witness.0.length, witness.1.length
        ),
        CommensurabilityVerdict::Commensurable { generator } => {
            format!("commensurable (generator: {generator})")
        }
        CommensurabilityVerdict::HeuristicIncommensurable { note } => {
            format!("heuristically incommensurable ({note})")
        }
        CommensurabilityVerdict::HeuristicCommensurable { note } => {
            format!("heuristically commensurable ({note})")
        }
    }
}

fn parse_box(scheme: &Scheme, coords: &[String]) -> Result<(Vec<Rational>, Vec<Rational>), CliError> {
    let vals: Vec<Rational> = coords
        .iter()
        .map(|c| parse_rational(c).map_err(|e| CliError::Other(e.to_string())))
        .collect::<Result<_, _>>()?;
    match (scheme.dim, vals.len()) {
        (1, 2) => Ok((vec![vals[0].clone()], vec![vals[1].clone()])),
        (2, 4) => Ok((
            vec![vals[0].clone(), vals[1].clone()],
            vec![vals[2].clone(), vals[3].clone()],
        )),
        _ => Err(CliError::Other(format!(
            "box needs {} coordinates for dimension {}",
            2 * scheme.dim,
            scheme.dim
        ))),
    }
}

fn select_anchor(
    scheme: &Scheme,
    root: usize,
    period: Option<&str>,
    index: usize,
    budget: u64,
) -> Result<multitile::flow::StationaryAnchor, CliError> {
    let horizon = match period {
        Some(p) => parse_exact_u(p)?,
        None => Rational::from_integer(8.into()),
    };
    let anchors = find_stationary_anchors(scheme, root, &horizon, budget).map_err(flow_err)?;
    let filtered: Vec<_> = match period {
        Some(_) => anchors
            .into_iter()
            .filter(|a| a.period_u == horizon)
            .collect(),
        None => anchors,
    };
    filtered
        .get(index)
        .cloned()
        .ok_or_else(|| CliError::Other("no stationary anchor found".into()))
}

fn run(cli: Cli) -> Result<(), CliError> {
    let budget = cli
        .budget
        .or_else(|| {
            std::env::var("MULTITILE_BUDGET")
                .ok()
                .and_then(|v| v.parse().ok())
        })
        .unwrap_or(multitile::flow::DEFAULT_TILE_BUDGET);
    let opts = GenOptions {
        budget,
        workers: cli.workers.max(1),
    };
    let precision = cli.precision;
    let mut manifest = Manifest::new(budget, opts.workers, precision);
    if cli.seed.is_some() {
        eprintln!("note: --seed is reserved and inert; all algorithms are deterministic");
    }

    match &cli.command {
        Command::Validate { scheme, normalize: do_norm } => {
            let mut s = load_scheme(scheme)?;
            manifest.scheme_hash = Some(s.content_hash_hex());
            if *do_norm {
                s = normalize(&s).map_err(|e| CliError::Other(e.to_string()))?;
            }
            let report = validate(&s);
            println!("scheme: {} (dimension {})", s.name, s.dim);
            println!("normalized: {}", report.normalized);
            for r in &report.rules {
                let mark = |ok: bool| if ok { "exact pass" } else { "FAIL" };
                println!(
                    "rule {}: volume identity: {}{}; containment: {}; interior disjointness: {}",
                    r.prototile,
                    mark(r.volume_identity),
                    if r.volume_identity {
                        String::new()
                    } else {
                        format!(" (deficit {})", r.volume_deficit)
                    },
                    mark(r.children_contained),
                    mark(r.children_disjoint),
                );
            }
            manifest.emit(cli.manifest.as_deref());
            if !report.all_passed() {
                return Err(CliError::Validation);
            }
        }
        Command::Graph { scheme, dot } => {
            let s = load_scheme(scheme)?;
            manifest.scheme_hash = Some(s.content_hash_hex());
            let g = build_graph(&s);
            println!("vertices: {}", g.vertex_count);
            println!("edges: {}", g.edges.len());
            for (i, e) in g.edges.iter().enumerate() {
                println!(
                    "  e{}: {} -> {}  scale {}  length {}",
                    i,
                    e.from,
                    e.to,
                    format_rational(&e.scale),
                    e.length
                );
            }
            let irreducible = is_irreducible(&g);
            println!("irreducible: {irreducible}");
            let verdict =
                classify_commensurability(&g, DEFAULT_CYCLE_BUDGET).map_err(graph_err)?;
            println!("{}", verdict_line(&verdict));
            let eval = multitile::graph::eval_matrix(&s, s.dim as u32);
            println!("M({}):", s.dim);
            for row in &eval.m {
                let cells: Vec<String> = row.iter().map(format_rational).collect();
                println!("  [{}]", cells.join(", "));
            }
            if irreducible && verdict.is_incommensurable() {
                let q = multitile::graph::compute_q(&s).map_err(graph_err)?;
                println!("Q numerator rows (all identical):");
                let cells: Vec<String> = q.numerator[0].iter().map(format_rational).collect();
                println!("  [{}]", cells.join(", "));
                println!("Q denominator: {}", q.denominator);
                for h in 1..=s.prototile_count() {
                    println!(
                        "q_{} = ({}) / denominator ≈ {}",
                        h,
                        format_rational(q.q_numerator(h)),
                        q.q_decimal(h, precision)
                    );
                }
            }
            if let Some(dot_path) = dot {
                let mut out = String::from("digraph substitution {\n");
                for v in 1..=g.vertex_count {
                    out.push_str(&format!("  v{v} [label=\"{}\"];\n", s.prototile(v).label));
                }
                for e in &g.edges {
                    out.push_str(&format!(
                        "  v{} -> v{} [label=\"{}\"];\n",
                        e.from, e.to, e.length
                    ));
                }
                out.push_str("}\n");
                write_output(&mut manifest, dot_path, out.as_bytes())?;
            }
            manifest.emit(cli.manifest.as_deref());
        }
        Command::Generate {
            scheme,
            root,
            time,
            out,
            csv,
            json,
        } => {
            let s = load_scheme(scheme)?;
            manifest.scheme_hash = Some(s.content_hash_hex());
            let tp = TimePoint::parse(time).map_err(CliError::Other)?;
            match tp {
                TimePoint::Exact(_) => {
                    let patch = generate(&s, *root, &tp, &opts).map_err(flow_err)?;
                    println!(
                        "patch: {} tiles, support volume {}",
                        patch.tiles.len(),
                        format_rational(&patch.volume())
                    );
                    if let Some(path) = out {
                        let mut bytes = Vec::new();
                        multitile::io::write_patch(&mut bytes, &patch)
                            .map_err(|e| CliError::Other(e.to_string()))?;
                        write_output(&mut manifest, path, &bytes)?;
                    }
                    if let Some(path) = csv {
                        write_output(
                            &mut manifest,
                            path,
                            multitile::io::patch_to_csv(&patch).as_bytes(),
                        )?;
                    }
                    if let Some(path) = json {
                        let value = multitile::io::patch_to_json(&patch);
                        write_output(
                            &mut manifest,
                            path,
                            serde_json::to_string_pretty(&value).unwrap().as_bytes(),
                        )?;
                    }
                }
                TimePoint::Float(t) => {
                    let tiles =
                        multitile::flow::generate_float(&s, *root, t, budget).map_err(flow_err)?;
                    println!("float-mode patch: {} tiles (diagnostic only)", tiles.len());
                }
            }
            manifest.emit(cli.manifest.as_deref());
        }
        Command::Stats {
            scheme,
            ptype,
            interval,
            json,
        } => {
            let s = load_scheme(scheme)?;
            manifest.scheme_hash = Some(s.content_hash_hex());
            let model = DensityModel::new(&s).map_err(|e| CliError::Other(e.to_string()))?;
            let window = parse_interval(&interval[0], &interval[1])?;
            let phi = model.phi(*ptype, &window);
            let nu = model.nu(*ptype, &window);
            let rel = model
                .relative_fraction(*ptype, &window)
                .map_err(|e| CliError::Other(e.to_string()))?;
            let beta = beta_min(&s, *ptype).map_err(|e| CliError::Other(e.to_string()))?;
            let total = model
                .phi_total_type(*ptype)
                .map_err(|e| CliError::Other(e.to_string()))?;
            let nu_total = model
                .nu_total_type(*ptype)
                .map_err(|e| CliError::Other(e.to_string()))?;
            if *json {
                let value = serde_json::json!({
                    "type": ptype,
                    "interval": format!("{window}"),
                    "beta_min": format_rational(&beta),
                    "phi": { "symbolic": format!("{phi}"), "decimal": phi.decimal(precision) },
                    "phi_total": { "symbolic": format!("{total}"), "decimal": total.decimal(precision) },
                    "nu": { "symbolic": format!("{nu}"), "decimal": nu.decimal(precision) },
                    "nu_total": { "symbolic": format!("{nu_total}"), "decimal": nu_total.decimal(precision) },
                    "relative_fraction": { "exact": format_rational(&rel),
                        "decimal": multitile::render::fmt_sig12(multitile::exact::rational_to_f64(&rel)) },
                });
                println!("{}", serde_json::to_string_pretty(&value).unwrap());
            } else {
                println!("type {} over {window}:", ptype);
                println!("  legal scales: ({}, 1]", format_rational(&beta));
                println!("  phi = {phi} ≈ {}", phi.decimal(precision));
                println!("  phi_total = {total} ≈ {}", total.decimal(precision));
                println!("  nu = {nu} ≈ {}", nu.decimal(precision));
                println!("  nu_total = {nu_total} ≈ {}", nu_total.decimal(precision));
                println!(
                    "  relative fraction = {} ≈ {}",
                    format_rational(&rel),
                    multitile::render::fmt_sig12(multitile::exact::rational_to_f64(&rel))
                );
            }
            manifest.emit(cli.manifest.as_deref());
        }
        Command::Census {
            patch,
            cells,
            scheme,
            csv,
            json,
        } => {
            let p = read_patch_file(patch)?;
            let s = resolve_patch_scheme(&p, scheme.as_ref())?;
            manifest.scheme_hash = Some(s.content_hash_hex());
            let mut parsed_cells: Vec<(usize, ScaleInterval)> = Vec::new();
            if cells.is_empty() {
                for j in 1..=s.prototile_count() {
                    let beta = beta_min(&s, j).map_err(|e| CliError::Other(e.to_string()))?;
                    parsed_cells.push((
                        j,
                        ScaleInterval::with_kind(
                            beta,
                            Rational::from_integer(1.into()),
                            multitile::asymptotics::IntervalKind::LeftOpen,
                        )
                        .map_err(|e| CliError::Other(e.to_string()))?,
                    ));
                }
            } else {
                for c in cells {
                    let parts: Vec<&str> = c.split(':').collect();
                    if parts.len() != 3 {
                        return Err(CliError::Other(format!("cell {c:?} must be type:lo:hi")));
                    }
                    let j: usize = parts[0]
                        .parse()
                        .map_err(|_| CliError::Other(format!("bad type in {c:?}")))?;
                    parsed_cells.push((j, parse_interval(parts[1], parts[2])?));
                }
            }
            let census = stats::census(&s, &p, &parsed_cells);
            println!(
                "census of {} tiles over volume {}:",
                census.total,
                format_rational(&census.volume)
            );
            for (i, cell) in census.cells.iter().enumerate() {
                println!(
                    "  type {} scale {}: {} tiles (rate {})",
                    cell.ptype,
                    cell.interval,
                    cell.count,
                    multitile::render::fmt_sig12(census.rate_f64(i))
                );
            }
            if *json {
                println!(
                    "{}",
                    serde_json::to_string_pretty(&multitile::io::census_to_json(&census)).unwrap()
                );
            }
            if let Some(path) = csv {
                write_output(
                    &mut manifest,
                    path,
                    multitile::io::census_to_csv(&census).as_bytes(),
                )?;
            }
            manifest.emit(cli.manifest.as_deref());
        }
        Command::Complexity {
            scheme,
            root,
            period,
            kmax,
            csv,
        } => {
            let s = load_scheme(scheme)?;
            manifest.scheme_hash = Some(s.content_hash_hex());
            let anchor = select_anchor(&s, *root, period.as_deref(), 0, budget)?;
            println!(
                "anchor: period ln({}), control point ({})",
                format_rational(&anchor.period_u),
                anchor
                    .control_point
                    .iter()
                    .map(format_rational)
                    .collect::<Vec<_>>()
                    .join(", ")
            );
            let profile = stats::complexity(&s, &anchor, *kmax, budget).map_err(flow_err)?;
            for (k, c) in profile.counts.iter().enumerate() {
                println!("  c({k}) = {c}");
            }
            if let Some(path) = csv {
                write_output(
                    &mut manifest,
                    path,
                    multitile::io::profile_to_csv(&profile).as_bytes(),
                )?;
            }
            manifest.emit(cli.manifest.as_deref());
        }
        Command::Discrepancy {
            scheme,
            root,
            times,
            csv,
        } => {
            let s = load_scheme(scheme)?;
            manifest.scheme_hash = Some(s.content_hash_hex());
            let model = DensityModel::new(&s).map_err(|e| CliError::Other(e.to_string()))?;
            let mut us = Vec::new();
            for t in times {
                us.push(parse_rational(t).map_err(|e| CliError::Other(e.to_string()))?);
            }
            let series =
                stats::discrepancy_series(&s, &model, *root, &us, budget).map_err(flow_err)?;
            println!(
                "distinct-tile ceiling: C = {} with exponent |E| = {}",
                multitile::render::fmt_sig12(series.fitted_ceiling),
                series.edge_count
            );
            for p in &series.points {
                println!(
                    "  u = {}: count {} vs expected {} (E = {}, distinct {})",
                    format_rational(&p.time_u),
                    p.count,
                    multitile::render::fmt_sig12(p.expected),
                    multitile::render::fmt_sig12(p.discrepancy),
                    p.distinct_tiles
                );
            }
            if let Some(path) = csv {
                write_output(
                    &mut manifest,
                    path,
                    multitile::io::discrepancy_to_csv(&series).as_bytes(),
                )?;
            }
            manifest.emit(cli.manifest.as_deref());
        }
        Command::Occurrences {
            haystack,
            needle,
            extract_box,
            dilation,
            region,
            scheme,
        } => {
            let hay = read_patch_file(haystack)?;
            let s = resolve_patch_scheme(&hay, scheme.as_ref())?;
            manifest.scheme_hash = Some(s.content_hash_hex());
            let needle_patch = read_patch_file(needle)?;
            let needle_tiles = match extract_box {
                Some(coords) => {
                    let (lo, hi) = parse_box(&s, coords)?;
                    stats::extract_box(&s, &needle_patch, &lo, &hi)
                }
                None => needle_patch.tiles.clone(),
            };
            let window = parse_interval(&dilation[0], &dilation[1])?;
            let (rlo, rhi) = parse_box(&s, region)?;
            let counts = stats::count_occurrences(&s, &hay, &needle_tiles, &window, &rlo, &rhi)
                .map_err(|e| CliError::Other(e.to_string()))?;
            println!(
                "needle of {} tiles, dilations {}: L = {}, N = {}",
                needle_tiles.len(),
                window,
                counts.l,
                counts.n
            );
            manifest.emit(cli.manifest.as_deref());
        }
        Command::Stationary {
            scheme,
            root,
            max_period,
            k,
            anchor,
            out,
        } => {
            let s = load_scheme(scheme)?;
            manifest.scheme_hash = Some(s.content_hash_hex());
            let horizon = match max_period {
                Some(mp) => parse_exact_u(mp)?,
                None => Rational::from_integer(8.into()),
            };
            let anchors =
                find_stationary_anchors(&s, *root, &horizon, budget).map_err(flow_err)?;
            if anchors.is_empty() {
                println!(
                    "no interior-fixed-point anchors up to ln({})",
                    format_rational(&horizon)
                );
            }
            for (i, a) in anchors.iter().enumerate() {
                println!(
                    "anchor {}: period ln({}), control point ({}), path {:?}",
                    i,
                    format_rational(&a.period_u),
                    a.control_point
                        .iter()
                        .map(format_rational)
                        .collect::<Vec<_>>()
                        .join(", "),
                    a.child_path
                );
            }
            if let Some(k) = k {
                let a = anchors
                    .get(*anchor)
                    .ok_or_else(|| CliError::Other(format!("no anchor with index {anchor}")))?;
                let patch = stationary_patch(&s, a, *k, &opts).map_err(flow_err)?;
                println!("stationary patch k={k}: {} tiles", patch.tiles.len());
                if let Some(path) = out {
                    let mut bytes = Vec::new();
                    multitile::io::write_patch(&mut bytes, &patch)
                        .map_err(|e| CliError::Other(e.to_string()))?;
                    write_output(&mut manifest, path, &bytes)?;
                }
            }
            manifest.emit(cli.manifest.as_deref());
        }
        Command::Render {
            patch,
            style,
            supertiles,
            period,
            scheme,
            out,
        } => {
            let p = read_patch_file(patch)?;
            let s = resolve_patch_scheme(&p, scheme.as_ref())?;
            manifest.scheme_hash = Some(s.content_hash_hex());
            let color_mode = match style.as_str() {
                "by-type" => ColorMode::ByType,
                "by-scale" => ColorMode::ByScale,
                "by-supertile" => ColorMode::BySupertile,
                other => {
                    return Err(CliError::Other(format!(
                        "unknown style {other:?}; expected by-type, by-scale or by-supertile"
                    )))
                }
            };
            let render_style = RenderStyle {
                color_mode,
                supertile_outlines: supertiles.is_some(),
                ..Default::default()
            };
            let groups = match supertiles {
                Some(m) => {
                    let period_u = parse_exact_u(period.as_deref().ok_or_else(|| {
                        CliError::Other("--supertiles needs --period ln(p/q)".into())
                    })?)?;
                    let anchors = find_stationary_anchors(&s, p.meta.root_type, &period_u, budget)
                        .map_err(flow_err)?;
                    let anchor = anchors
                        .iter()
                        .find(|a| a.period_u == period_u)
                        .ok_or_else(|| {
                            CliError::Other("no anchor with the requested period".into())
                        })?
                        .clone();
                    Some(supertile_decompose(&s, &p, &anchor, *m).map_err(flow_err)?)
                }
                None => None,
            };
            if render_style.color_mode == ColorMode::BySupertile && groups.is_none() {
                return Err(CliError::Other(
                    "style by-supertile needs --supertiles m and --period".into(),
                ));
            }
            let svg = if p.meta.dim == 2 {
                render_svg(&s, &p, &render_style, groups.as_deref())
                    .map_err(|e| CliError::Other(e.to_string()))?
            } else {
                render_1d(&s, &p, &render_style).map_err(|e| CliError::Other(e.to_string()))?
            };
            write_output(&mut manifest, out, svg.as_bytes())?;
            println!("wrote {}", out.display());
            manifest.emit(cli.manifest.as_deref());
        }
        Command::Oracle { scheme, root, time } => {
            let s = load_scheme(scheme)?;
            manifest.scheme_hash = Some(s.content_hash_hex());
            let u = parse_exact_u(time)?;
            let g = build_graph(&s);
            let count =
                path_count_oracle(&g, *root, &u, budget.max(100_000_000)).map_err(graph_err)?;
            println!("{count}");
            manifest.emit(cli.manifest.as_deref());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Validation) => ExitCode::from(1),
        Err(CliError::Budget(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
        Err(CliError::Other(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
