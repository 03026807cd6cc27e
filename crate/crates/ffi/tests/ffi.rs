use std::ffi::CStr;
use std::process::Command;
use std::ptr;

use amoc_ci_ffi::*;

fn last_error() -> String {
    let p = amoc_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn step_series() -> Vec<f64> {
    let mut v = vec![0.0; 40];
    v.extend(std::iter::repeat_n(2.0, 40));
    v
}

#[test]
fn fit_bootstrap_and_lrv_round_trip() {
    let data = step_series();
    unsafe {
        let mut series = ptr::null_mut();
        assert_eq!(amoc_series_new(data.as_ptr(), data.len(), &mut series), AmocStatus::Ok);
        assert_eq!(amoc_series_len(series), 80);

        let mut cusum = vec![0.0; 79];
        assert_eq!(amoc_cusum(series, 0.5, cusum.as_mut_ptr(), cusum.len()), AmocStatus::Ok);
        assert_eq!(
            amoc_cusum(series, 0.5, cusum.as_mut_ptr(), 10),
            AmocStatus::BufferTooSmall
        );

        let mut fit = ptr::null_mut();
        assert_eq!(amoc_fit(series, 0.5, &mut fit), AmocStatus::Ok);
        let mut summary = AmocFitSummary::default();
        assert_eq!(amoc_fit_summary(fit, &mut summary), AmocStatus::Ok);
        assert_eq!((summary.n, summary.m_hat, summary.d_hat), (80, 40, 2.0));

        let mut lrv = AmocLrv::default();
        assert_eq!(amoc_bartlett_lrv(series, 40, 0, &mut lrv), AmocStatus::Ok);
        assert_eq!(lrv.lambda, 8);
        assert!(lrv.floored && lrv.tau2 > 0.0);

        let mut boot = ptr::null_mut();
        assert_eq!(
            amoc_bootstrap_new(fit, 8, 200, 1, AMOC_SCHEME_CIRCULAR_NONOVERLAPPING, &mut boot),
            AmocStatus::Ok
        );
        let mut draws = vec![0usize; amoc_bootstrap_len(boot)];
        assert_eq!(draws.len(), 200);
        assert_eq!(amoc_bootstrap_samples(boot, draws.as_mut_ptr(), draws.len()), AmocStatus::Ok);
        assert!(draws.iter().all(|&m| m == 40));
        let mut ci = AmocInterval::default();
        assert_eq!(amoc_bootstrap_ci(boot, 0.05, &mut ci), AmocStatus::Ok);
        assert_eq!((ci.lower, ci.upper, ci.level), (40.0, 40.0, 0.95));

        amoc_bootstrap_free(boot);
        amoc_fit_free(fit);
        amoc_series_free(series);
    }
}

#[test]
fn limit_law_and_asymptotic_interval() {
    unsafe {
        let mut cfg = std::mem::zeroed::<AmocLimitConfig>();
        assert_eq!(amoc_limit_config_default(0.5, 0.5, &mut cfg), AmocStatus::Ok);
        assert_eq!(cfg.grid, AMOC_GRID_DRIFT_SCALED);
        cfg.replicates = 4000;
        cfg.half_width = 100.0;
        cfg.step = 0.1;
        let mut samples = ptr::null_mut();
        assert_eq!(amoc_limit_simulate(&cfg, &mut samples), AmocStatus::Ok);
        assert!(amoc_limit_boundary_fraction(samples) <= 0.005);
        let (mut lo, mut hi) = (0.0, 0.0);
        assert_eq!(amoc_limit_quantile(samples, 0.05, &mut lo), AmocStatus::Ok);
        assert_eq!(amoc_limit_quantile(samples, 0.95, &mut hi), AmocStatus::Ok);
        assert!(lo < 0.0 && hi > 0.0);

        let mut ci = AmocInterval::default();
        assert_eq!(amoc_asymptotic_ci(samples, 40, 1.0, 1.0, 0.1, &mut ci), AmocStatus::Ok);
        assert_eq!((ci.lower, ci.upper), (40.0 - hi, 40.0 - lo));
        assert_eq!(
            amoc_asymptotic_ci(samples, 40, 1.0, 0.0, 0.1, &mut ci),
            AmocStatus::ZeroShift
        );
        amoc_limit_free(samples);
    }
}

#[test]
fn errors_set_status_and_message() {
    unsafe {
        let mut series = ptr::null_mut();
        let short = [1.0, 2.0];
        assert_eq!(amoc_series_new(short.as_ptr(), 2, &mut series), AmocStatus::DataError);
        assert!(series.is_null());
        assert!(last_error().contains('3'), "{}", last_error());

        let bad = [1.0, f64::NAN, 2.0];
        assert_eq!(amoc_series_new(bad.as_ptr(), 3, &mut series), AmocStatus::DataError);
        assert_eq!(amoc_series_new(ptr::null(), 3, &mut series), AmocStatus::InvalidArgument);
        assert_eq!(
            amoc_series_new(short.as_ptr(), 2, ptr::null_mut()),
            AmocStatus::InvalidArgument
        );

        let ok = [1.0, 2.0, 5.0, 4.0];
        assert_eq!(amoc_series_new(ok.as_ptr(), 4, &mut series), AmocStatus::Ok);
        let mut fit = ptr::null_mut();
        assert_eq!(amoc_fit(series, 0.9, &mut fit), AmocStatus::InvalidArgument);
        assert!(fit.is_null());
        assert_eq!(amoc_fit(series, 0.0, &mut fit), AmocStatus::Ok);
        let mut boot = ptr::null_mut();
        assert_eq!(amoc_bootstrap_new(fit, 2, 10, 0, 7, &mut boot), AmocStatus::InvalidArgument);
        assert!(last_error().contains("scheme"));

        let mut cfg = std::mem::zeroed::<AmocLimitConfig>();
        amoc_limit_config_default(0.02, 0.0, &mut cfg);
        cfg.grid = AMOC_GRID_FIXED;
        cfg.half_width = 20.0;
        cfg.step = 0.2;
        cfg.replicates = 1000;
        let mut samples = ptr::null_mut();
        assert_eq!(amoc_limit_simulate(&cfg, &mut samples), AmocStatus::NumericalGuard);
        assert!(samples.is_null());

        amoc_fit_free(fit);
        amoc_series_free(series);
        amoc_series_free(ptr::null_mut());
        assert_eq!(amoc_series_len(ptr::null()), 0);
    }
}

#[test]
fn version_is_package_version() {
    let v = unsafe { CStr::from_ptr(amoc_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_compiles_as_c_and_cpp() {
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(
        &src,
        "#include \"amoc_ci.h\"\n\
         int main(void) {\n\
           double x[4] = {0, 0, 1, 1};\n\
           AmocSeries *s = NULL; AmocFit *f = NULL; AmocFitSummary sum;\n\
           if (amoc_series_new(x, 4, &s) != AMOC_STATUS_OK) return 1;\n\
           if (amoc_fit(s, 0.5, &f) != AMOC_STATUS_OK) return 1;\n\
           amoc_fit_summary(f, &sum);\n\
           amoc_fit_free(f); amoc_series_free(s);\n\
           return (int)sum.m_hat - 2;\n\
         }\n",
    )
    .unwrap();
    let include = concat!(env!("CARGO_MANIFEST_DIR"), "/include");
    for (compiler, extra) in [("cc", &["-std=c99"][..]), ("c++", &["-x", "c++"][..])] {
        let status = match Command::new(compiler)
            .args(extra)
            .args(["-fsyntax-only", "-Wall", "-Werror", "-I", include])
            .arg(&src)
            .status()
        {
            Ok(s) => s,
            Err(_) => {
                eprintln!("{compiler} not found; skipping header check");
                continue;
            }
        };
        assert!(status.success(), "{compiler} rejected amoc_ci.h");
    }
}
