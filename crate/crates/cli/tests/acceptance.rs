//! Runs every acceptance criterion with the default numerical settings and no
//! disk cache. One line per criterion, followed by its notes.

use std::process::ExitCode;

use henon_cli::verify;
use henon_core::bifurcation::Engine;
use henon_core::radial::SolveOptions;
use henon_core::spectral::SpectralOptions;

fn main() -> ExitCode {
    let engine = Engine::new(SolveOptions::default(), SpectralOptions::default());
    let mut failed = 0;
    for id in verify::ALL {
        let c = verify::run_one(&engine, id);
        println!(
            "criterion {:>2} {}: {} (measured {:.6e}, tolerance {:.2e}, {:.2} s)",
            c.id,
            if c.passed { "PASS" } else { "FAIL" },
            c.title,
            c.measured,
            c.tolerance,
            c.runtime_s
        );
        for n in &c.notes {
            println!("    {n}");
        }
        if !c.passed {
            failed += 1;
        }
    }
    if failed == 0 {
        println!("acceptance: all {} criteria passed", verify::ALL.len());
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failed} criteria failed");
        ExitCode::FAILURE
    }
}
