//! Acceptance suite. Runs without the libtest harness so that the one-line
//! verdict for each criterion is always printed.

mod common;

use std::panic;
use std::path::PathBuf;
use std::process::Command;
use std::time::Instant;

use common::*;
use phasesvd::{
    build_unitaries_step1, parse_matrix, parse_schmidt_json, parse_state, parse_svd_json,
    schmidt_decompose, solve_diagonal_step2, svd, BipartiteState, ComplexMatrix, PhaseConvention,
    C64, DEFAULT_TOL,
};
use rand::Rng;

type Check = Result<(), String>;
type Criterion = (&'static str, fn() -> Check);

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn real(rows: &[[f64; 2]]) -> ComplexMatrix {
    ComplexMatrix::from_real_rows(rows).unwrap()
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Check {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn close(label: &str, got: C64, want: C64, tol: f64) -> Check {
    ensure((got - want).norm() <= tol, || {
        format!("{label}: got {got}, want {want}")
    })
}

fn close_matrix(label: &str, got: &ComplexMatrix, want: &ComplexMatrix, tol: f64) -> Check {
    let diff = max_entry_diff(got, want);
    ensure(diff <= tol, || format!("{label}: entrywise gap {diff:e}"))
}

fn relative_residual(f: &phasesvd::SvdFactorization, a: &ComplexMatrix) -> f64 {
    f.reconstruct().sub(a).unwrap().frobenius_norm() / a.frobenius_norm().max(1.0)
}

fn symmetric_2x2() -> Check {
    let a = real(&[[1.0, 2.0], [2.0, 1.0]]);
    let f = svd(&a, PhaseConvention::AllInU, DEFAULT_TOL).map_err(|e| e.to_string())?;
    close("sigma0", c(f.sigma[0], 0.0), c(3.0, 0.0), 1e-12)?;
    close("sigma1", c(f.sigma[1], 0.0), c(1.0, 0.0), 1e-12)?;

    let h = std::f64::consts::FRAC_1_SQRT_2;
    let plus_minus = real(&[[h, h], [h, -h]]);
    let step2 = solve_diagonal_step2(&a, &plus_minus, &plus_minus, DEFAULT_TOL)
        .map_err(|e| e.to_string())?;
    close("d0", step2.d.0[0], c(3.0, 0.0), 1e-12)?;
    close("d1", step2.d.0[1], c(-1.0, 0.0), 1e-12)?;

    close_matrix("U", &f.u, &real(&[[h, -h], [h, h]]), 1e-12)?;
    close_matrix("V", &f.v, &real(&[[h, h], [h, -h]]), 1e-12)
}

fn hermitian_2x2() -> Check {
    let a = ComplexMatrix::from_rows(&[[c(2.0, 0.0), c(0.0, -3.0)], [c(0.0, 3.0), c(2.0, 0.0)]])
        .unwrap();
    let f = svd(&a, PhaseConvention::AllInU, DEFAULT_TOL).map_err(|e| e.to_string())?;
    close("sigma0", c(f.sigma[0], 0.0), c(5.0, 0.0), 1e-12)?;
    close("sigma1", c(f.sigma[1], 0.0), c(1.0, 0.0), 1e-12)?;

    let h = std::f64::consts::FRAC_1_SQRT_2;
    let y_basis =
        ComplexMatrix::from_rows(&[[c(h, 0.0), c(h, 0.0)], [c(0.0, h), c(0.0, -h)]]).unwrap();
    let step2 =
        solve_diagonal_step2(&a, &y_basis, &y_basis, DEFAULT_TOL).map_err(|e| e.to_string())?;
    close("d0", step2.d.0[0], c(5.0, 0.0), 1e-12)?;
    close("d1", step2.d.0[1], c(-1.0, 0.0), 1e-12)?;

    for conv in PhaseConvention::named() {
        let f = svd(&a, conv.clone(), DEFAULT_TOL).map_err(|e| e.to_string())?;
        ensure(f.residual <= 1e-12, || {
            format!("{conv} residual {:e}", f.residual)
        })?;
    }
    Ok(())
}

fn shared_d_pairs() -> Check {
    let pairs = [
        (
            real(&[[1.0, 2.0], [2.0, 1.0]]),
            real(&[[2.0, 1.0], [1.0, 2.0]]),
        ),
        (
            ComplexMatrix::from_rows(&[[c(3.0, 0.0), c(0.0, -2.0)], [c(0.0, 2.0), c(3.0, 0.0)]])
                .unwrap(),
            ComplexMatrix::from_rows(&[[c(2.0, 0.0), c(0.0, -3.0)], [c(0.0, 3.0), c(2.0, 0.0)]])
                .unwrap(),
        ),
    ];
    for (a, b) in &pairs {
        let fa = svd(a, PhaseConvention::AllInU, DEFAULT_TOL).map_err(|e| e.to_string())?;
        let fb = svd(b, PhaseConvention::AllInU, DEFAULT_TOL).map_err(|e| e.to_string())?;
        ensure(
            fa.sigma
                .iter()
                .zip(&fb.sigma)
                .all(|(x, y)| (x - y).abs() <= 1e-12),
            || format!("pair should share D: {:?} vs {:?}", fa.sigma, fb.sigma),
        )?;
        ensure(fa.residual <= 1e-12 && fb.residual <= 1e-12, || {
            format!("residuals {:e}, {:e}", fa.residual, fb.residual)
        })?;
        // Borrowing the other matrix's factors gives the wrong matrix back.
        let crossed =
            fb.u.mat_mul(&fa.d_matrix())
                .unwrap()
                .mat_mul(&fb.v.adjoint())
                .unwrap();
        ensure(max_entry_diff(&crossed, a) > 0.5, || {
            "crossed factors reproduced A".into()
        })?;
    }
    Ok(())
}

fn rectangular_2x3() -> Check {
    let a = ComplexMatrix::from_rows(&[
        [c(1.0, 0.0), c(1.0, 0.0), c(0.0, 1.0)],
        [c(1.0, 0.0), c(-1.0, 0.0), c(0.0, 1.0)],
    ])
    .unwrap();
    let f = svd(&a, PhaseConvention::AllInU, DEFAULT_TOL).map_err(|e| e.to_string())?;
    close("sigma0", c(f.sigma[0], 0.0), c(2.0, 0.0), 1e-12)?;
    close("sigma1", c(f.sigma[1], 0.0), c(2f64.sqrt(), 0.0), 1e-12)?;
    ensure(f.residual <= 1e-12, || format!("residual {:e}", f.residual))?;

    let h = std::f64::consts::FRAC_1_SQRT_2;
    let u0 = real(&[[h, h], [h, -h]]);
    let v0 = ComplexMatrix::from_rows(&[
        [c(0.0, h), c(0.0, 0.0), c(0.0, -h)],
        [c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)],
        [c(h, 0.0), c(0.0, 0.0), c(h, 0.0)],
    ])
    .unwrap();
    let step2 = solve_diagonal_step2(&a, &u0, &v0, DEFAULT_TOL).map_err(|e| e.to_string())?;
    close("d0", step2.d.0[0], c(0.0, 2.0), 1e-12)?;
    close("d1", step2.d.0[1], c(2f64.sqrt(), 0.0), 1e-12)
}

fn two_qubit_schmidt() -> Check {
    let s10 = 10f64.sqrt();
    let r2 = 2f64.sqrt();
    let amps = vec![
        c(0.0, 2.0 / s10),
        c(1.0 / s10, 0.0),
        c(1.0 / s10, 0.0),
        c(2.0 / s10, 0.0),
    ];
    let psi = BipartiteState::new(2, 2, amps.clone()).unwrap();
    let sd =
        schmidt_decompose(&psi, PhaseConvention::AllInU, DEFAULT_TOL).map_err(|e| e.to_string())?;
    close(
        "coefficient0^2",
        c(sd.coefficients[0].powi(2), 0.0),
        c((5.0 + 2.0 * r2) / 10.0, 0.0),
        1e-12,
    )?;
    close(
        "coefficient1^2",
        c(sd.coefficients[1].powi(2), 0.0),
        c((5.0 - 2.0 * r2) / 10.0, 0.0),
        1e-12,
    )?;

    let u0 = ComplexMatrix::from_rows(&[
        [c(r2 / 2.0, 0.0), c(-r2 / 2.0, 0.0)],
        [c(0.5, -0.5), c(0.5, -0.5)],
    ])
    .unwrap();
    let v0 = ComplexMatrix::from_rows(&[
        [c(r2 / 2.0, 0.0), c(-r2 / 2.0, 0.0)],
        [c(0.5, 0.5), c(0.5, 0.5)],
    ])
    .unwrap();
    let step2 =
        solve_diagonal_step2(&psi.to_matrix(), &u0, &v0, DEFAULT_TOL).map_err(|e| e.to_string())?;
    let d0 = c(r2, 4.0 + r2) / (2.0 * s10);
    close("d0", step2.d.0[0], d0, 1e-12)?;

    for (j, (got, want)) in sd.reconstruct_state().iter().zip(&amps).enumerate() {
        close(&format!("amplitude {j}"), *got, *want, 1e-10)?;
    }
    Ok(())
}

/// Rank-one terms `d_j |u_j><v_j|` of a Step-2 result.
fn outer_terms(d: &[C64], u: &ComplexMatrix, v: &ComplexMatrix) -> Vec<ComplexMatrix> {
    d.iter()
        .enumerate()
        .map(|(j, &dj)| {
            let (uj, vj) = (u.column(j), v.column(j));
            let mut t = ComplexMatrix::zeros(u.rows(), v.rows());
            for (r, &x) in uj.iter().enumerate() {
                for (col, &y) in vj.iter().enumerate() {
                    t[(r, col)] = dj * x * y.conj();
                }
            }
            t
        })
        .collect()
}

fn random_matrix_properties() -> Check {
    let mut g = rng(0x5eed_0006);
    let mut stats = (0usize, 0usize, 0usize);
    for case in 0..1000 {
        let (m, n) = (g.gen_range(1..=8), g.gen_range(1..=8));
        let k = m.min(n);
        let a = if case % 4 == 3 && k > 1 {
            stats.2 += 1;
            let rank = g.gen_range(1..k);
            random_rank_deficient(&mut g, m, n, rank)
        } else {
            random_matrix(&mut g, m, n)
        };
        if m != n {
            stats.1 += 1;
        }
        stats.0 += 1;
        let fail = |what: String| format!("case {case} ({m}x{n}): {what}");

        let runs: Vec<_> = PhaseConvention::named()
            .into_iter()
            .map(|conv| svd(&a, conv, DEFAULT_TOL))
            .collect::<Result<_, _>>()
            .map_err(|e| fail(e.to_string()))?;
        let base = &runs[0];
        for f in &runs {
            let r = relative_residual(f, &a);
            ensure(r <= 1e-9, || {
                fail(format!("{} residual {r:e}", f.convention))
            })?;
            let (du, dv) = (f.u.unitarity_defect(), f.v.unitarity_defect());
            ensure(du <= 1e-10 && dv <= 1e-10, || {
                fail(format!("unitarity {du:e} {dv:e}"))
            })?;
            ensure(f.sigma.windows(2).all(|w| w[0] >= w[1]), || {
                fail(format!("sigma order {:?}", f.sigma))
            })?;
            let gap = max_entry_diff(&f.reconstruct(), &base.reconstruct());
            ensure(gap <= 1e-10, || fail(format!("convention gap {gap:e}")))?;
        }

        let step1 = build_unitaries_step1(&a, DEFAULT_TOL).map_err(|e| fail(e.to_string()))?;
        let (mut u0, mut v0) = (step1.u0, step1.v0);
        for j in 0..m {
            u0.scale_column(j, random_phase(&mut g));
        }
        for j in 0..n {
            v0.scale_column(j, random_phase(&mut g));
        }
        let step2 =
            solve_diagonal_step2(&a, &u0, &v0, DEFAULT_TOL).map_err(|e| fail(e.to_string()))?;
        let shuffled = outer_terms(step2.d.entries(), &step2.u0_adj, &v0);
        for (j, (t, s)) in base.rank_one_terms().iter().zip(&shuffled).enumerate() {
            let gap = max_entry_diff(t, s);
            ensure(gap <= 1e-9, || fail(format!("term {j} moved by {gap:e}")))?;
        }
    }
    println!(
        "    {} matrices, {} rectangular, {} rank-deficient",
        stats.0, stats.1, stats.2
    );
    Ok(())
}

fn degenerate_sigma() -> Check {
    let mut g = rng(0x5eed_0007);
    let cases = 300;
    for case in 0..cases {
        let (m, n) = (g.gen_range(3..=6), g.gen_range(3..=6));
        let sigma = g.gen_range(0.2..5.0);
        let tau = if case % 3 == 0 {
            0.0
        } else {
            g.gen_range(0.2..5.0)
        };
        let mut diag = vec![C64::new(0.0, 0.0); m.min(n)];
        diag[0] = c(sigma, 0.0);
        diag[1] = c(sigma, 0.0);
        diag[2] = c(tau, 0.0);
        let core = ComplexMatrix::from_diagonal(m, n, &diag);
        let (q1, q2) = (random_unitary(&mut g, m), random_unitary(&mut g, n));
        let a = q1.mat_mul(&core).unwrap().mat_mul(&q2.adjoint()).unwrap();
        for conv in PhaseConvention::named() {
            let f = svd(&a, conv.clone(), DEFAULT_TOL)
                .map_err(|e| format!("case {case} ({m}x{n}) {conv}: {e}"))?;
            let r = relative_residual(&f, &a);
            ensure(r <= 1e-9, || {
                format!("case {case} ({m}x{n}) {conv}: residual {r:e}")
            })?;
        }
    }
    println!("    {cases} matrices Q1 diag(s, s, t) Q2^dagger");
    Ok(())
}

fn schmidt_properties() -> Check {
    let mut g = rng(0x5eed_0008);
    for case in 0..500 {
        let (da, db) = (g.gen_range(1..=6), g.gen_range(1..=6));
        let mut amps: Vec<C64> = (0..da * db).map(|_| complex_gaussian(&mut g)).collect();
        if case % 2 == 0 {
            let norm = amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            amps.iter_mut().for_each(|z| *z /= norm);
        }
        let psi = BipartiteState::new(da, db, amps.clone()).unwrap();
        let fail = |what: String| format!("case {case} ({da}x{db}): {what}");
        let sd = schmidt_decompose(&psi, PhaseConvention::AllInU, DEFAULT_TOL)
            .map_err(|e| fail(e.to_string()))?;

        let norm_sq: f64 = amps.iter().map(|z| z.norm_sqr()).sum();
        let coeff_sq: f64 = sd.coefficients.iter().map(|s| s * s).sum();
        ensure((coeff_sq - norm_sq).abs() <= 1e-10 * norm_sq, || {
            fail(format!("norm {coeff_sq} vs {norm_sq}"))
        })?;

        for (name, basis) in [("basis_a", &sd.basis_a), ("basis_b", &sd.basis_b)] {
            for (i, x) in basis.iter().enumerate() {
                for (j, y) in basis.iter().enumerate() {
                    let dot: C64 = x.iter().zip(y).map(|(p, q)| p.conj() * q).sum();
                    let want = if i == j { 1.0 } else { 0.0 };
                    ensure((dot - want).norm() <= 1e-10, || {
                        fail(format!("{name} gram[{i}][{j}] = {dot}"))
                    })?;
                }
            }
        }

        for (x, y) in sd.reconstruct_state().iter().zip(&amps) {
            ensure((x - y).norm() <= 1e-10, || {
                fail(format!("round trip {x} vs {y}"))
            })?;
        }

        let max_bits = (da.min(db) as f64).log2();
        ensure(
            sd.entropy_bits >= 0.0 && sd.entropy_bits <= max_bits + 1e-12,
            || {
                fail(format!(
                    "entropy {} outside [0, {max_bits}]",
                    sd.entropy_bits
                ))
            },
        )?;

        let (ua, ub) = (random_unitary(&mut g, da), random_unitary(&mut g, db));
        let moved = ua
            .mat_mul(&psi.to_matrix())
            .unwrap()
            .mat_mul(&ub.transpose())
            .unwrap();
        let rotated = BipartiteState::new(da, db, moved.into_vec()).unwrap();
        let sd2 = schmidt_decompose(&rotated, PhaseConvention::AllInU, DEFAULT_TOL)
            .map_err(|e| fail(e.to_string()))?;
        for (x, y) in sd.coefficients.iter().zip(&sd2.coefficients) {
            ensure((x - y).abs() <= 1e-10, || {
                fail(format!("local unitary moved {x} to {y}"))
            })?;
        }
    }
    println!("    500 states up to 6x6");
    Ok(())
}

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}

fn cli(args: &[&str]) -> Result<String, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_phasesvd"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!(
            "{args:?} exited with {:?}: {}",
            out.status.code(),
            String::from_utf8_lossy(&out.stderr)
        ));
    }
    String::from_utf8(out.stdout).map_err(|e| e.to_string())
}

fn cli_golden() -> Check {
    let fixtures = [
        "example1.mat",
        "example2.mat",
        "example3.mat",
        "example4.state",
    ];
    for name in fixtures {
        cli(&["verify", fixture(name).to_str().unwrap()])?;
    }
    for name in &fixtures[..3] {
        let path = fixture(name);
        let a =
            parse_matrix(&std::fs::read_to_string(&path).unwrap()).map_err(|e| e.to_string())?;
        for (flag, conv) in [
            ("u", PhaseConvention::AllInU),
            ("v", PhaseConvention::AllInV),
            ("split", PhaseConvention::HalfHalf),
        ] {
            let text = cli(&[
                "svd",
                path.to_str().unwrap(),
                "--convention",
                flag,
                "--output",
                "json",
            ])?;
            let from_cli = parse_svd_json(&text).map_err(|e| e.to_string())?;
            let direct = svd(&a, conv, DEFAULT_TOL).map_err(|e| e.to_string())?;
            ensure(from_cli == direct, || {
                format!("{name} --convention {flag}: JSON differs from the API result")
            })?;
        }
    }
    let path = fixture("example4.state");
    let psi = parse_state(&std::fs::read_to_string(&path).unwrap()).map_err(|e| e.to_string())?;
    let text = cli(&["schmidt", path.to_str().unwrap(), "--output", "json"])?;
    let from_cli = parse_schmidt_json(&text).map_err(|e| e.to_string())?;
    let direct =
        schmidt_decompose(&psi, PhaseConvention::AllInU, DEFAULT_TOL).map_err(|e| e.to_string())?;
    ensure(from_cli == direct, || {
        "example4.state: JSON differs from the API result".into()
    })
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("symmetric 2x2 example", symmetric_2x2),
        ("Hermitian 2x2 example", hermitian_2x2),
        ("shared-D pairs reconstruct themselves", shared_d_pairs),
        ("rectangular 2x3 example", rectangular_2x3),
        ("two-qubit Schmidt example", two_qubit_schmidt),
        ("random matrix properties", random_matrix_properties),
        ("repeated singular values", degenerate_sigma),
        ("Schmidt properties", schmidt_properties),
        ("CLI verify and JSON round trip", cli_golden),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = panic::catch_unwind(check).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let ms = start.elapsed().as_millis();
        match result {
            Ok(()) => println!("criterion {}: PASS  {name} ({ms} ms)", i + 1),
            Err(why) => {
                failures += 1;
                println!("criterion {}: FAIL  {name}: {why}", i + 1);
            }
        }
    }
    if failures > 0 {
        println!("{failures} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all 9 acceptance criteria passed");
}
