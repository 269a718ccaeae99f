use std::f64::consts::PI;
use std::path::Path;

use bellforge_core::akmeas::{ak_variances, momentum_peaks, regime_warnings, AkConfig};
use bellforge_core::causal::{
    context_difference, cross_context_distance, rs_map_1d, rs_map_2d, takabayasi_gap, verify_marginals_1d,
    ChainOrdering, VerifyMethod,
};
use bellforge_core::lhv::{
    brute_force_feasible, lhv_feasible, quantum_behavior, Behavior, BehaviorFile, ChshVariant, Feasibility,
    MARGINAL_TOL,
};
use bellforge_core::psbell::marginal_theorem_demo;
use bellforge_core::spinor::{chsh_correlations, maximize_chsh, ChshKinds, ChshSettings, TSIRELSON_BOUND};
use bellforge_core::waves::{
    correlated_gaussian_2d, gaussian_packet, oscillator_state, Axis, GridWavefunction, Representation, Sign,
};
use bellforge_core::wigner::{
    chsh_parity, hudson_check, marginal_errors, maximize_chsh_parity, maximize_chsh_parity_unrestricted,
    parity_correlation, wigner_transform, ParityChshSettings, ParitySetting, TmsvParams,
};
use num_complex::Complex64;
use serde::Deserialize;
use serde_json::json;

use crate::args::*;
use crate::error::{CliError, CliResult};
use crate::input::*;
use crate::output::{num, Outcome, Table};

/// Default angles a, b, a′, b′ in radians.
const BELL_ANGLES: [f64; 4] = [0.0, PI / 8.0, PI / 4.0, 3.0 * PI / 8.0];

/// Wigner marginal tolerances for one and two modes.
const WIGNER_TOL_1D: f64 = 1e-5;
const WIGNER_TOL_2D: f64 = 1e-4;

/// Relative tolerance of the readout variance relations.
const AK_VARIANCE_TOL: f64 = 1e-2;

/// Grid nodes below this fraction of the peak density are ignored when
/// comparing the two chain orderings.
const COMPARE_THRESHOLD: f64 = 1e-3;

pub fn dispatch(cli: &Cli) -> CliResult<Outcome> {
    match &cli.command {
        Command::Chsh(a) => chsh(a, cli.seed),
        Command::Lhv(a) => lhv(a),
        Command::Rs1d(a) => rs1d(a, cli.seed),
        Command::Rs2d(a) => rs2d(a, cli.seed),
        Command::MarginalTheorem(a) => marginal_theorem(a),
        Command::Wigner(a) => wigner(a),
        Command::ParityChsh(a) => parity_chsh(a, cli.seed),
        Command::AkCompare(a) => ak_compare(a),
        Command::Waves(WavesCommand::Dump(a)) => dump(a),
    }
}

fn chsh(args: &ChshArgs, seed: u64) -> CliResult<Outcome> {
    let state = spinor_state(&args.state)?;
    let kinds: ChshKinds = args.kinds.parse()?;
    let settings = if args.optimize {
        maximize_chsh(&state, kinds, seed)?.0
    } else {
        let angles = match &args.angles {
            Some(s) => {
                let v = parse_list(s, 4, "--angles")?;
                let scale = if args.degrees { PI / 180.0 } else { 1.0 };
                [v[0] * scale, v[1] * scale, v[2] * scale, v[3] * scale]
            }
            None => BELL_ANGLES,
        };
        ChshSettings::from_angles(angles, kinds)
    };
    let correlations = chsh_correlations(&state, &settings)?;
    let s = correlations.chsh();
    let mut angles = settings.angles();
    if args.degrees {
        angles = angles.map(f64::to_degrees);
    }

    let mut table = Table::new(&["pair", "correlation"]);
    for (pair, e) in [
        ("ab", correlations.ab),
        ("ab'", correlations.ab_prime),
        ("a'b", correlations.a_prime_b),
        ("a'b'", correlations.a_prime_b_prime),
    ] {
        table.push(vec![pair.into(), num(e)]);
    }
    let mut out = Outcome::new("chsh", table);
    out.set("state", StateFile::from(&state))?;
    out.set("kinds", kinds.to_string())?;
    out.set("settings", settings)?;
    out.set("angles", json!({ "unit": if args.degrees { "degrees" } else { "radians" }, "a": angles[0], "b": angles[1], "a'": angles[2], "b'": angles[3] }))?;
    out.set("correlations", correlations)?;
    out.set("S", s)?;
    out.check(s <= TSIRELSON_BOUND + 1e-9, || format!("S = {s} exceeds 2√2"));
    Ok(out)
}

/// The parts of a `chsh` report that define a behavior.
#[derive(Deserialize)]
struct ChshReport {
    state: StateFile,
    settings: ChshSettings,
}

fn lhv(args: &LhvArgs) -> CliResult<Outcome> {
    let behavior = match (&args.behavior, &args.from_state) {
        (Some(path), _) => Behavior::try_from(read_json::<BehaviorFile>(path)?)?,
        (None, Some(path)) => {
            let report: ChshReport = read_json(path)?;
            let amps = report.state.amplitudes.map(|[re, im]| Complex64::new(re, im));
            let state = bellforge_core::spinor::StateVector4::new(amps)?;
            quantum_behavior(&state, &report.settings)?
        }
        (None, None) => return Err(CliError::Validation("one of --behavior or --from-state is required".into())),
    };
    let variants = behavior.chsh_variants();
    let verdict = lhv_feasible(&behavior);
    let oracle = brute_force_feasible(&behavior);

    let mut table = Table::new(&["variant", "minus", "sign", "value"]);
    for (v, value) in variants.iter().enumerate() {
        let cv = ChshVariant::from_index(v);
        table.push(vec![
            v.to_string(),
            format!("{}{}", cv.minus.0 + 1, cv.minus.1 + 1),
            cv.sign.to_string(),
            num(*value),
        ]);
    }
    let mut out = Outcome::new("lhv", table);
    out.set("behavior", BehaviorFile::from(&behavior))?;
    out.set("chsh_variants", variants)?;
    match verdict {
        Feasibility::Feasible(q) => {
            let err = q.marginal_error(&behavior);
            out.set("verdict", "feasible")?;
            out.set("joint_distribution", q)?;
            out.set("marginal_error", err)?;
            out.check(err < MARGINAL_TOL, || format!("joint distribution misses the marginals by {err:e}"));
        }
        Feasibility::Infeasible(cert) => {
            out.set("verdict", "infeasible")?;
            out.set("certificate", cert)?;
            out.check(cert.value > 2.0, || format!("certificate value {} does not exceed 2", cert.value));
        }
    }
    out.check(verdict.is_feasible() == oracle.is_feasible(), || "simplex and vertex enumeration disagree".into());
    Ok(out)
}

fn verify_methods(mc_samples: Option<usize>, seed: u64) -> Vec<VerifyMethod> {
    let mut methods = vec![VerifyMethod::Quadrature];
    if let Some(samples) = mc_samples {
        methods.push(VerifyMethod::MonteCarlo { samples, seed });
    }
    methods
}

fn rs1d(args: &Rs1dArgs, seed: u64) -> CliResult<Outcome> {
    let psi = build_wave(&args.wave, 4096)?;
    require_dim(&psi, 1)?;
    let map = rs_map_1d(&psi, args.epsilon)?;
    let reports = verify_methods(args.mc_samples, seed)
        .into_iter()
        .map(|m| verify_marginals_1d(&map, &psi, m))
        .collect::<Result<Vec<_>, _>>()?;
    let gap = takabayasi_gap(&psi)?;

    let mut table = Table::new(&["x", "p_hat"]);
    for (x, p) in map.nodes().into_iter().zip(&map.values) {
        table.push_numbers(&[x, *p]);
    }
    let mut out = Outcome::new("rs1d", table);
    out.set("epsilon", args.epsilon.value())?;
    out.set("grid", json!({ "n": map.source.n, "extent": map.source.extent() }))?;
    out.set("monotone", map.is_monotone())?;
    out.set("marginals", &reports)?;
    out.set("takabayasi", gap)?;
    out.check(map.is_monotone(), || "map is not monotone".into());
    for r in &reports {
        for d in r.distances.iter().filter(|d| !d.passed) {
            out.check(false, || format!("{} marginal L1 {:e} exceeds {:e}", d.ccs, d.l1, r.tolerance));
        }
    }
    Ok(out)
}

fn chain_ordering(o: Ordering) -> ChainOrdering {
    match o {
        Ordering::Px => ChainOrdering::Px,
        Ordering::Xp => ChainOrdering::Xp,
    }
}

fn rs2d_state(args: &Rs2dArgs) -> CliResult<GridWavefunction> {
    if let Some((sign, l)) = cutoff_state(&args.psi)? {
        return cutoff_wave(sign, l, Some(args.grid), args.xmax);
    }
    if args.psi != "gaussian" {
        return load_wave(Path::new(&args.psi));
    }
    let c = parse_list(&args.cov, 3, "--cov")?;
    let k = parse_list(&args.chirp, 3, "--chirp")?;
    let axis = match args.xmax {
        Some(x) => Axis::with_extent(Representation::Position, args.grid, x)?,
        None => Axis::balanced(Representation::Position, args.grid)?,
    };
    Ok(correlated_gaussian_2d([axis, axis], [[c[0], c[1]], [c[1], c[2]]], [[k[0], k[1]], [k[1], k[2]]])?)
}

fn rs2d(args: &Rs2dArgs, seed: u64) -> CliResult<Outcome> {
    let psi = rs2d_state(args)?;
    require_dim(&psi, 2)?;
    let ordering = chain_ordering(args.ordering);
    let map = rs_map_2d(&psi, args.epsilon, args.epsilon2, ordering)?;
    let reports = verify_methods(args.mc_samples, seed)
        .into_iter()
        .map(|m| map.verify(&psi, m))
        .collect::<Result<Vec<_>, _>>()?;
    let (_, skipped) = ordering.contexts();
    let skipped_l1 = cross_context_distance(&map, &psi)?;

    let axes = *map.axes();
    let mut table = Table::new(&["x1", "x2", "p1", "p2"]);
    for i in 0..axes[0].n {
        for j in 0..axes[1].n {
            let (x1, x2) = (axes[0].coord(i), axes[1].coord(j));
            let (p1, p2) = map.apply(x1, x2);
            table.push_numbers(&[x1, x2, p1, p2]);
        }
    }
    let mut out = Outcome::new("rs2d", table);
    out.set("ordering", ordering)?;
    out.set("epsilon", [args.epsilon.value(), args.epsilon2.value()])?;
    out.set("grid", json!({ "n": axes[0].n, "extent": axes[0].extent() }))?;
    out.set("marginals", &reports)?;
    out.set("skipped_context", json!({ "ccs": skipped, "l1": skipped_l1 }))?;
    if args.compare {
        let other = match ordering {
            ChainOrdering::Px => ChainOrdering::Xp,
            ChainOrdering::Xp => ChainOrdering::Px,
        };
        let alt = rs_map_2d(&psi, args.epsilon, args.epsilon2, other)?;
        let alt_reports = alt.verify(&psi, VerifyMethod::Quadrature)?;
        let diff = context_difference(&map, &alt, &psi, COMPARE_THRESHOLD)?;
        out.set("comparison", json!({ "ordering": other, "map_difference": diff, "marginals": alt_reports }))?;
        out.check(alt_reports.passed(), || format!("{other:?} chain fails its marginal checks"));
    }
    for r in &reports {
        for d in r.distances.iter().filter(|d| !d.passed) {
            out.check(false, || format!("{} marginal L1 {:e} exceeds {:e}", d.ccs, d.l1, r.tolerance));
        }
    }
    Ok(out)
}

fn marginal_theorem(args: &MarginalTheoremArgs) -> CliResult<Outcome> {
    let report = marginal_theorem_demo(&args.ls, args.grid)?;
    let mut table = Table::new(&["L", "S"]);
    for row in &report.rows {
        let s = match args.sign {
            Sign::Plus => row.s_plus,
            Sign::Minus => row.s_minus,
        };
        table.push_numbers(&[row.l, s]);
    }
    let mut out = Outcome::new("marginal-theorem", table);
    out.set("sign", args.sign.value())?;
    out.set("grid", args.grid)?;
    out.set("rows", &report.rows)?;
    out.set("monotone", report.monotone)?;
    out.set("bounded", report.bounded)?;
    out.set("antisymmetric", report.antisymmetric)?;
    out.set("exceeds_2_at", report.exceeds_2_at)?;
    out.set("extrapolated_limit", report.extrapolated_limit)?;
    out.check(report.monotone, || "S(ψ₊, L) is not strictly increasing".into());
    out.check(report.bounded, || "|S| exceeds 2√2".into());
    out.check(report.antisymmetric, || "S(ψ₊, L) ≠ −S(ψ₋, L)".into());
    Ok(out)
}

fn wigner(args: &WignerArgs) -> CliResult<Outcome> {
    let axis = || -> CliResult<Axis> {
        let n = args.grid.unwrap_or(256);
        Ok(match args.xmax {
            Some(x) => Axis::with_extent(Representation::Position, n, x)?,
            None => Axis::balanced(Representation::Position, n)?,
        })
    };
    let psi = match (args.state.as_str(), cutoff_state(&args.state)?) {
        (_, Some((sign, l))) => cutoff_wave(sign, l, args.grid, args.xmax)?,
        ("gaussian", None) => gaussian_packet(axis()?, 0.0, 0.0, args.sigma, 0.0, 1.0)?,
        ("excited", None) => oscillator_state(axis()?, args.level)?,
        (other, None) => return Err(CliError::Validation(format!("unknown state {other:?}"))),
    };
    let w = wigner_transform(&psi)?;
    let checks = marginal_errors(&psi, &w)?;
    let hudson = hudson_check(&psi)?;
    let tol = if psi.dim() == 1 { WIGNER_TOL_1D } else { WIGNER_TOL_2D };

    // two-mode grids are tabulated on the slice q₂ = p₂ = 0
    let (table, origin) = if psi.dim() == 1 {
        let (q, p) = (w.q_axes[0], w.p_axes[0]);
        let mut t = Table::new(&["q", "p", "W"]);
        for i in 0..q.n {
            for j in 0..p.n {
                t.push_numbers(&[q.coord(i), p.coord(j), w.values[i * p.n + j]]);
            }
        }
        (t, w.get(&[q.n / 2], &[p.n / 2]))
    } else {
        let (q, p) = (w.q_axes.clone(), w.p_axes.clone());
        let (c2, d2) = (q[1].n / 2, p[1].n / 2);
        let mut t = Table::new(&["q1", "p1", "W"]);
        for i in 0..q[0].n {
            for j in 0..p[0].n {
                t.push_numbers(&[q[0].coord(i), p[0].coord(j), w.get(&[i, c2], &[j, d2])]);
            }
        }
        (t, w.get(&[q[0].n / 2, c2], &[p[0].n / 2, d2]))
    };
    let mut out = Outcome::new("wigner", table);
    out.set("state", &args.state)?;
    out.set("dim", psi.dim())?;
    out.set("grid", json!({ "n": psi.axis(0).n, "extent": psi.axis(0).extent() }))?;
    out.set("min_W", w.min())?;
    out.set("W_origin", origin)?;
    out.set("total", w.total())?;
    out.set("marginal_errors", &checks)?;
    out.set("marginal_tolerance", tol)?;
    out.set("hudson", hudson)?;
    for c in checks.iter().filter(|c| !(c.max_error <= tol)) {
        out.check(false, || format!("{} marginal off by {:e}", c.label, c.max_error));
    }
    Ok(out)
}

fn parity_chsh(args: &ParityChshArgs, seed: u64) -> CliResult<Outcome> {
    let params = TmsvParams::new(args.r)?;
    let (settings, s) = match &args.alphas {
        Some(text) => {
            let v = parse_list(text, 8, "--alphas")?;
            let a = |k: usize| ParitySetting::new(Complex64::new(v[2 * k], v[2 * k + 1]));
            let settings = ParityChshSettings { alpha: a(0), alpha_prime: a(1), beta: a(2), beta_prime: a(3) };
            (settings, chsh_parity(params, &settings))
        }
        None if args.unrestricted => maximize_chsh_parity_unrestricted(params, seed, args.starts),
        None => maximize_chsh_parity(params, seed),
    };
    let e = |a, b| parity_correlation(params, a, b);
    let mut table = Table::new(&["setting", "re", "im"]);
    for (name, p) in [
        ("alpha", settings.alpha),
        ("alpha'", settings.alpha_prime),
        ("beta", settings.beta),
        ("beta'", settings.beta_prime),
    ] {
        table.push(vec![name.into(), num(p.re), num(p.im)]);
    }
    let mut out = Outcome::new("parity-chsh", table);
    out.set("r", args.r)?;
    out.set(
        "search",
        if args.alphas.is_some() {
            "none"
        } else if args.unrestricted {
            "unrestricted"
        } else {
            "restricted"
        },
    )?;
    out.set("settings", settings)?;
    out.set(
        "correlations",
        json!({
            "ab": e(settings.alpha, settings.beta),
            "ab'": e(settings.alpha, settings.beta_prime),
            "a'b": e(settings.alpha_prime, settings.beta),
            "a'b'": e(settings.alpha_prime, settings.beta_prime),
        }),
    )?;
    out.set("S", s)?;
    out.check(s <= TSIRELSON_BOUND + 1e-9, || format!("S = {s} exceeds 2√2"));
    Ok(out)
}

fn ak_compare(args: &AkCompareArgs) -> CliResult<Outcome> {
    let axis = match args.xmax {
        Some(x) => Axis::with_extent(Representation::Position, args.grid, x)?,
        None => Axis::balanced(Representation::Position, args.grid)?,
    };
    let psi = gaussian_packet(axis, 0.0, 0.0, args.sigma, args.t, args.mass)?;
    let cfg = AkConfig::new(args.b)?;
    let peaks = momentum_peaks(&psi, &cfg, args.epsilon)?;
    let v = ak_variances(&psi, &cfg)?;
    let (_, var_q) = psi.density().moments(0);
    let (_, var_p) = psi.fourier(0)?.density().moments(0);
    let warnings = regime_warnings(var_q, var_p, args.b);
    for w in &warnings {
        eprintln!("warning: {w}");
    }

    let mut table = Table::new(&["q", "p_ak", "p_rs"]);
    for row in &peaks.rows {
        table.push(vec![num(row.q), row.p_ak.map(num).unwrap_or_default(), num(row.p_rs)]);
    }
    let residuals = v.residuals();
    let mut out = Outcome::new("ak-compare", table);
    out.set("b", args.b)?;
    out.set("var_x1", v.var_x1)?;
    out.set("var_x2", v.var_x2)?;
    out.set("expected_var_x1", v.expected_x1)?;
    out.set("expected_var_x2", v.expected_x2)?;
    out.set("eq23_residuals", residuals)?;
    out.set("ak_fit", peaks.ak_fit)?;
    out.set("rs_fit", peaks.rs_fit)?;
    out.set("warnings", &warnings)?;
    for (name, r) in ["x1", "x2"].iter().zip(residuals) {
        out.check(r.abs() < AK_VARIANCE_TOL, || format!("Var({name}) relative residual {r:e}"));
    }
    Ok(out)
}

fn dump(args: &DumpArgs) -> CliResult<Outcome> {
    let mut psi = build_wave(&args.wave, 1024)?;
    if args.repr == Repr::Momentum {
        for k in 0..psi.dim() {
            psi = psi.fourier(k)?;
        }
    }
    let rho = psi.density();
    let names: &[&str] = match (psi.dim(), args.repr) {
        (1, Repr::Position) => &["x", "density"],
        (1, Repr::Momentum) => &["p", "density"],
        (_, Repr::Position) => &["x1", "x2", "density"],
        (_, Repr::Momentum) => &["p1", "p2", "density"],
    };
    let mut table = Table::new(names);
    let axes = psi.axes().to_vec();
    if axes.len() == 1 {
        for (j, v) in rho.values.iter().enumerate() {
            table.push_numbers(&[axes[0].coord(j), *v]);
        }
    } else {
        let n1 = axes[1].n;
        for (k, v) in rho.values.iter().enumerate() {
            table.push_numbers(&[axes[0].coord(k / n1), axes[1].coord(k % n1), *v]);
        }
    }
    let moments: Vec<_> =
        (0..psi.dim()).map(|k| rho.moments(k)).map(|(m, v)| json!({ "mean": m, "variance": v })).collect();
    let mut out = Outcome::new("waves-dump", table);
    out.set("dim", psi.dim())?;
    out.set(
        "axes",
        axes.iter().map(|a| json!({ "n": a.n, "spacing": a.spacing, "extent": a.extent() })).collect::<Vec<_>>(),
    )?;
    out.set("total", rho.total())?;
    out.set("moments", moments)?;
    Ok(out)
}
