use std::collections::BTreeMap;

use qinfo::acceptance::{run_acceptance, run_criterion};
use qinfo::capacity::{coherent_info_max, CapacityBudget};
use qinfo::compress::{compression_sweep, IIDSource};
use qinfo::entangle::thermal_curve;
use qinfo::entropy::{entropy_budget, entropy_inequality_suite, relative_entropy, vn_entropy};
use qinfo::linalg::partial_trace;
use qinfo::metrics::{absolute_distance, derived_metrics, dynamic_fidelity, fidelity, metric_inequality_suite};
use qinfo::ops::channels;
use qinfo::protocols::{format_bits, parse_bits, superdense, teleport, teleport_branches};
use qinfo::qec::{bit_flip_fidelity_bound, correct_cycle, cycle_channel, make_code, min_pure_cycle_fidelity, syndrome_table, PhysicalNoise};
use qinfo::random::random_pure;
use qinfo::tomography::{simulate_tomography, TomographyMode};
use qinfo::{seeded, ComplexMatrix, DensityOperator, MetricReport, PureState, SystemShape, C64};

use crate::files::{read_channel, read_density, serialize_channel, serialize_matrix, ChannelFile, MatrixFile};
use crate::output::{num, Table};
use crate::{CapacityCmd, ChannelCmd, Command, CompressCmd, EntangleCmd, FuzzCmd, ProtocolsCmd, QecCmd, TomographyCmd};

type Out = Result<Vec<Table>, String>;

fn text<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

pub fn check(seed: u64, only: &[usize]) -> bool {
    let results = if only.is_empty() {
        run_acceptance(seed)
    } else {
        only.iter().map(|&id| run_criterion(id, seed)).collect()
    };
    for r in &results {
        println!("{r}");
    }
    results.iter().all(|r| r.passed())
}

pub fn run(cmd: &Command, seed: u64) -> Out {
    match cmd {
        Command::Entropy(a) => {
            let rho = match &a.state {
                Some(p) => read_density(p).map_err(text)?,
                None => DensityOperator::diagonal(&a.diag).map_err(|e| format!("diag: {e}"))?,
            };
            let rho = if a.keep.is_empty() { rho } else { partial_trace(&rho, &a.keep).map_err(|e| format!("keep: {e}"))? };
            let purity = (rho.matrix() * rho.matrix()).trace().re;
            let mut eig = rho.eigenvalues();
            eig.sort_by(|x, y| y.total_cmp(x));
            let rank = eig.iter().filter(|&&l| l > 1e-12).count();
            let mut t = Table::pairs(&[
                ("dimension", rho.dim().to_string()),
                ("entropy_bits", num(vn_entropy(&rho))),
                ("purity", num(purity)),
                ("rank", rank.to_string()),
            ]);
            for (i, l) in eig.iter().enumerate() {
                t.row(vec![format!("eigenvalue_{i}"), num(*l)]);
            }
            Ok(vec![t])
        }
        Command::Distance(a) => {
            let rho = read_density(&a.rho).map_err(|e| format!("rho: {e}"))?;
            let sigma = read_density(&a.sigma).map_err(|e| format!("sigma: {e}"))?;
            let d = absolute_distance(&rho, &sigma).map_err(text)?;
            let f = fidelity(&rho, &sigma).map_err(text)?;
            let m = derived_metrics(&rho, &sigma).map_err(text)?;
            let rel = relative_entropy(&rho, &sigma).map_err(text)?;
            Ok(vec![Table::pairs(&[
                ("absolute_distance", num(d)),
                ("fidelity", num(f)),
                ("angle", num(m.angle)),
                ("error", num(m.error)),
                ("relative_entropy_bits", num(rel)),
            ])])
        }
        Command::Channel(ChannelCmd::Apply { channel, state, out }) => {
            let op = read_channel(channel).map_err(text)?;
            let rho = match state {
                Some(p) => read_density(p).map_err(text)?,
                None => DensityOperator::maximally_mixed(op.in_shape().clone()),
            };
            if rho.dim() != op.in_dim() {
                return Err(format!("state: dimension {} does not match channel input {}", rho.dim(), op.in_dim()));
            }
            let applied = op.apply(&rho).map_err(text)?;
            let budget = entropy_budget(&rho, &op).map_err(text)?;
            let mut t = Table::pairs(&[
                ("probability", num(applied.trace)),
                ("dynamic_fidelity", num(dynamic_fidelity(&rho, &op).map_err(text)?)),
            ]);
            for (label, v) in &budget.entries {
                t.row(vec![label.clone(), num(*v)]);
            }
            if let Some(path) = out {
                let rho_out = op.apply_normalized(&rho).map_err(text)?;
                let file = MatrixFile::from_matrix(rho_out.matrix(), Some(rho_out.shape()));
                std::fs::write(path, serialize_matrix(&file)).map_err(|e| format!("out: {e}"))?;
            }
            Ok(vec![t])
        }
        Command::Tomography(TomographyCmd::Run { channel, incomplete, out }) => {
            let op = read_channel(channel).map_err(text)?;
            let mode = if *incomplete { TomographyMode::Incomplete } else { TomographyMode::Complete };
            let res = simulate_tomography(&op, mode).map_err(text)?;
            let mut summary = Table::pairs(&[
                ("residual", num(res.residual)),
                ("kraus_operators", res.kraus.as_ref().map_or("none".into(), |k| k.kraus().len().to_string())),
            ]);
            for (i, p) in res.probabilities.iter().enumerate() {
                summary.row(vec![format!("probability_{i}"), num(*p)]);
            }
            if let (Some(path), Some(k)) = (out, &res.kraus) {
                std::fs::write(path, serialize_channel(&ChannelFile::from_operation(k))).map_err(|e| format!("out: {e}"))?;
            }
            Ok(vec![summary.titled("reconstruction"), matrix_table(&res.chi).titled("chi")])
        }
        Command::Entangle(EntangleCmd::ThermalCurve { b, tmin, tmax, steps }) => {
            let curve = thermal_curve(*b, *tmin, *tmax, *steps).map_err(text)?;
            let mut t = Table::new(&["T", "concurrence", "eof"]);
            for (temp, conc, eof) in curve {
                t.row(vec![num(temp), num(conc), num(eof)]);
            }
            Ok(vec![t])
        }
        Command::Compress(CompressCmd::Sweep { probs, ns, epsilon }) => {
            let src = IIDSource::diagonal(probs).map_err(|e| format!("probs: {e}"))?;
            let rows = compression_sweep(&src, ns, *epsilon).map_err(text)?;
            let mut t = Table::new(&["n", "typical_mass", "rank_exponent", "fidelity"]);
            for (n, mass, rank, f) in rows {
                t.row(vec![n.to_string(), num(mass), num(rank), num(f)]);
            }
            Ok(vec![t, Table::pairs(&[("source_entropy_bits", num(src.entropy()))])])
        }
        Command::Qec(QecCmd::Demo { code, p, inputs }) => qec_demo(code, *p, *inputs, seed),
        Command::Capacity(CapacityCmd::Estimate { channel, n, restarts }) => {
            let op = read_channel(channel).map_err(text)?;
            let budget = CapacityBudget { restarts: *restarts, seed, ..CapacityBudget::default() };
            let est = coherent_info_max(&op, *n, &budget).map_err(text)?;
            let converged = est.optimizer_trace.iter().filter(|r| r.converged).count();
            let summary = Table::pairs(&[
                ("n", est.n.to_string()),
                ("coherent_information_max", num(est.value)),
                ("per_use", num(est.per_use())),
                ("restarts", est.optimizer_trace.len().to_string()),
                ("converged", converged.to_string()),
            ]);
            let mut trace = Table::new(&["restart", "value", "iterations", "converged"]);
            for r in &est.optimizer_trace {
                trace.row(vec![r.restart.to_string(), num(r.value), r.iterations.to_string(), r.converged.to_string()]);
            }
            Ok(vec![
                summary.titled("estimate"),
                matrix_table(est.argmax_state.matrix()).titled("argmax_state"),
                trace.titled("optimizer_trace"),
            ])
        }
        Command::Protocols(ProtocolsCmd::Teleport { theta, phi }) => {
            let amps = match (theta, phi) {
                (Some(t), Some(f)) => {
                    qinfo::ComplexVector::from_vec(vec![C64::new((t / 2.0).cos(), 0.0), C64::from_polar((t / 2.0).sin(), *f)])
                }
                _ => random_pure(2, &mut seeded(seed)),
            };
            let psi = PureState::new(amps, SystemShape::qubits(1)).map_err(text)?;
            let run = teleport(&psi, seed).map_err(text)?;
            let summary = Table::pairs(&[
                ("measured", format_bits(&run.bits)),
                ("probability", num(run.probability)),
                ("fidelity", num(run.fidelity(&psi))),
            ]);
            let mut all = Table::new(&["bits", "probability", "fidelity"]);
            for b in teleport_branches(&psi).map_err(text)? {
                all.row(vec![format_bits(&b.bits), num(b.probability), num(b.fidelity(&psi))]);
            }
            Ok(vec![summary.titled("run"), all.titled("branches")])
        }
        Command::Protocols(ProtocolsCmd::Superdense { bits }) => {
            let sent = parse_bits(bits).map_err(|e| format!("bits: {e}"))?;
            let r = superdense(sent, seed).map_err(text)?;
            let intercepted = qinfo::protocols::intercept_state(sent).map_err(text)?;
            let mixed = DensityOperator::maximally_mixed(SystemShape::qubits(1));
            Ok(vec![Table::pairs(&[
                ("sent", format_bits(&r.sent)),
                ("decoded", format_bits(&r.decoded)),
                ("probability", num(r.probability)),
                ("intercept_distance_from_mixed", num(absolute_distance(&intercepted, &mixed).map_err(text)?)),
            ])])
        }
        Command::Fuzz(FuzzCmd::Inequalities { samples }) => {
            let mut rng = seeded(seed);
            let mut reports = entropy_inequality_suite(*samples, &mut rng).map_err(text)?;
            reports.extend(metric_inequality_suite(*samples, &mut rng).map_err(text)?);
            reports.extend(qinfo::entangle::entanglement_inequality_suite(*samples, &mut rng).map_err(text)?);
            Ok(vec![fuzz_table(&reports)])
        }
    }
}

fn matrix_table(m: &ComplexMatrix) -> Table {
    let mut t = Table::new(&["row", "col", "re", "im"]);
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            t.row(vec![r.to_string(), c.to_string(), num(m[(r, c)].re), num(m[(r, c)].im)]);
        }
    }
    t
}

fn fuzz_table(reports: &[MetricReport]) -> Table {
    // name -> (instances, violations, min slack)
    let mut agg: BTreeMap<&str, (usize, usize, f64)> = BTreeMap::new();
    for r in reports {
        let e = agg.entry(r.name.as_str()).or_insert((0, 0, f64::INFINITY));
        e.0 += 1;
        e.1 += usize::from(!r.holds());
        if let Some(b) = r.bound {
            e.2 = e.2.min(b.slack);
        }
    }
    let mut t = Table::new(&["inequality", "instances", "violations", "min_slack"]);
    for (name, (n, v, s)) in agg {
        t.row(vec![name.to_string(), n.to_string(), v.to_string(), if s.is_finite() { num(s) } else { "-".into() }]);
    }
    t
}

fn qec_demo(name: &str, p: f64, inputs: usize, seed: u64) -> Out {
    let code = make_code(name).map_err(|e| format!("code: {e}"))?;
    if !(0.0..=1.0).contains(&p) {
        return Err(format!("p: {p} is not a probability"));
    }
    let mut syn = Table::new(&["error", "syndrome", "fidelity"]);
    for row in syndrome_table(&code).map_err(text)? {
        let s: Vec<String> = row.outcomes.iter().map(|o| o.to_string()).collect();
        syn.row(vec![row.error, s.join(" "), num(row.fidelity)]);
    }
    let mut rng = seeded(seed);
    let mixed = DensityOperator::maximally_mixed(SystemShape::qubits(1));
    let mut summary = Table::pairs(&[("code", code.name.clone()), ("p", num(p))]);
    let noise = match name {
        "bit_flip" => PhysicalNoise::iid(&channels::bit_flip(p).map_err(text)?, code.n_qubits),
        "phase_flip" => PhysicalNoise::iid(&channels::phase_flip(p).map_err(text)?, code.n_qubits),
        // Depolarizing noise on every qubit of the nine-qubit code exceeds the
        // dense branch budget; a single noisy qubit is shown instead.
        _ => PhysicalNoise::local(channels::depolarizing(p).map_err(text)?, vec![0]),
    }
    .map_err(text)?;
    let cycle = correct_cycle(&code, &noise, &mixed).map_err(text)?;
    let chan = cycle_channel(&code, &noise).map_err(text)?;
    summary.row(vec!["noise".into(), if name == "shor9" { "depolarizing on qubit 0" } else { "independent on every qubit" }.into()]);
    summary.row(vec!["cycle_fidelity_mixed_input".into(), num(cycle.fidelity)]);
    summary.row(vec!["min_pure_input_fidelity".into(), num(min_pure_cycle_fidelity(&chan, inputs, &mut rng).map_err(text)?)]);
    if name != "shor9" {
        summary.row(vec!["fidelity_bound".into(), num(bit_flip_fidelity_bound(p))]);
    }
    Ok(vec![syn.titled("syndromes"), summary.titled("cycle")])
}
