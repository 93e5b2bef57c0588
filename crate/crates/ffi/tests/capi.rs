use std::ffi::{CStr, CString};
use std::ptr;

use perturbshield::pipeline::{defend, Defense, PipelineConfig};
use perturbshield::{ColorSpace, Raster};
use perturbshield_ffi::*;

fn scene(w: u32, h: u32, c: usize) -> Vec<u8> {
    let mut st = 7u64;
    (0..w as usize * h as usize * c)
        .map(|i| {
            st = st
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            let px = i / c;
            let base = if (px % w as usize / 6 + px / w as usize / 6).is_multiple_of(2) {
                50u8
            } else {
                200
            };
            base.wrapping_add((st >> 61) as u8)
        })
        .collect()
}

fn handle(w: u32, h: u32, cs: PsColorSpace, data: &[u8]) -> *mut PsRaster {
    let mut out = ptr::null_mut();
    let st = unsafe { ps_raster_new(w, h, cs, data.as_ptr(), data.len(), &mut out) };
    assert_eq!(st, PsStatus::Ok);
    out
}

fn bytes(r: *const PsRaster) -> Vec<u8> {
    let mut len = 0;
    let p = unsafe { ps_raster_data(r, &mut len) };
    unsafe { std::slice::from_raw_parts(p, len) }.to_vec()
}

fn last_error() -> Option<String> {
    let p = ps_last_error_message();
    (!p.is_null()).then(|| unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned())
}

#[test]
fn raster_round_trip_through_handles() {
    let data = scene(20, 10, 3);
    let r = handle(20, 10, PsColorSpace::Rgb, &data);
    unsafe {
        assert_eq!(ps_raster_width(r), 20);
        assert_eq!(ps_raster_height(r), 10);
        assert_eq!(ps_raster_channels(r), 3);
    }
    assert_eq!(bytes(r), data);

    let tmp = tempfile::tempdir().unwrap();
    let path = CString::new(tmp.path().join("x.png").to_str().unwrap()).unwrap();
    let mut back = ptr::null_mut();
    unsafe {
        assert_eq!(ps_raster_save(r, path.as_ptr()), PsStatus::Ok);
        assert_eq!(ps_raster_load(path.as_ptr(), &mut back), PsStatus::Ok);
    }
    assert_eq!(bytes(back), data);
    unsafe {
        ps_raster_free(r);
        ps_raster_free(back);
    }
}

#[test]
fn defaults_match_the_library() {
    let mut cfg = std::mem::MaybeUninit::<PsConfig>::uninit();
    let cfg = unsafe {
        assert_eq!(ps_config_default(cfg.as_mut_ptr()), PsStatus::Ok);
        cfg.assume_init()
    };
    let lib = PipelineConfig::default();
    assert_eq!(cfg.defense, PsDefense::FastAdaptiveGk);
    assert_eq!(&cfg.kernels[..cfg.n_kernels], &lib.kernels[..]);
    assert_eq!(
        (cfg.alpha, cfg.colors, cfg.lambda_v),
        (lib.alpha, lib.colors, lib.lambda_v)
    );

    let data = scene(24, 18, 3);
    let r = handle(24, 18, PsColorSpace::Rgb, &data);
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { ps_defend(r, &cfg, &mut out) }, PsStatus::Ok);
    let img = Raster::new(24, 18, ColorSpace::Rgb, data).unwrap();
    assert_eq!(bytes(out), defend(&img, &lib).unwrap().image.data());
    unsafe {
        ps_raster_free(out);
        ps_raster_free(r);
    }
}

#[test]
fn every_defense_runs() {
    let data = scene(16, 16, 1);
    let r = handle(16, 16, PsColorSpace::Gray, &data);
    let mut cfg = std::mem::MaybeUninit::<PsConfig>::uninit();
    let mut cfg = unsafe {
        ps_config_default(cfg.as_mut_ptr());
        cfg.assume_init()
    };
    for d in Defense::ALL {
        cfg.defense = d.into();
        let mut out = ptr::null_mut();
        assert_eq!(unsafe { ps_defend(r, &cfg, &mut out) }, PsStatus::Ok, "{d}");
        assert_eq!(unsafe { ps_raster_channels(out) }, 1);
        unsafe { ps_raster_free(out) };
    }
    cfg.defense = PsDefense::None;
    let mut out = ptr::null_mut();
    unsafe { ps_defend(r, &cfg, &mut out) };
    assert_eq!(bytes(out), data);
    unsafe {
        ps_raster_free(out);
        ps_raster_free(r);
    }
}

#[test]
fn baselines_and_edges() {
    let data = scene(32, 32, 3);
    let r = handle(32, 32, PsColorSpace::Rgb, &data);
    let img = Raster::new(32, 32, ColorSpace::Rgb, data).unwrap();
    let mut out = ptr::null_mut();
    unsafe {
        assert_eq!(ps_jpeg(r, 60, &mut out), PsStatus::Ok);
        assert_eq!(
            bytes(out),
            perturbshield::codec::jpeg_roundtrip(&img, 60)
                .unwrap()
                .data()
        );
        ps_raster_free(out);
        assert_eq!(ps_median(r, 3, &mut out), PsStatus::Ok);
        assert_eq!(
            bytes(out),
            perturbshield::smooth::median_blur(&img, 3).unwrap().data()
        );
        ps_raster_free(out);
        assert_eq!(ps_gaussian(r, 5, &mut out), PsStatus::Ok);
        assert_eq!(
            bytes(out),
            perturbshield::smooth::gaussian_blur(&img, 5)
                .unwrap()
                .data()
        );
        ps_raster_free(out);
        assert_eq!(ps_bit_depth(r, 2, &mut out), PsStatus::Ok);
        assert!(bytes(out).iter().all(|v| [0, 85, 170, 255].contains(v)));
        ps_raster_free(out);
    }

    let mut edges = ptr::null_mut();
    let (mut lo, mut hi) = (0, 0);
    let (mut mask, mut soft) = (ptr::null_mut(), ptr::null_mut());
    unsafe {
        assert_eq!(ps_canny(r, 70.0, 7, &mut edges), PsStatus::Ok);
        assert_eq!(ps_edges_thresholds(edges, &mut lo, &mut hi), PsStatus::Ok);
        assert_eq!(ps_edges_map(edges, false, &mut mask), PsStatus::Ok);
        assert_eq!(ps_edges_map(edges, true, &mut soft), PsStatus::Ok);
    }
    assert!(lo <= hi);
    let m = bytes(mask);
    assert!(m.iter().all(|&v| v == 0 || v == 255) && m.contains(&255));
    assert_eq!(unsafe { ps_raster_channels(soft) }, 1);
    unsafe {
        ps_raster_free(mask);
        ps_raster_free(soft);
        ps_edges_free(edges);
        ps_raster_free(r);
    }
}

#[test]
fn errors_are_reported_with_codes_and_messages() {
    let mut out = ptr::null_mut();
    let data = [1u8; 5];
    unsafe {
        assert_eq!(
            ps_raster_new(2, 2, PsColorSpace::Rgb, data.as_ptr(), 5, &mut out),
            PsStatus::InvalidDimensions
        );
        assert!(out.is_null());
        assert!(last_error().is_some());
        assert_eq!(
            ps_raster_new(2, 2, PsColorSpace::Gray, ptr::null(), 4, &mut out),
            PsStatus::NullPointer
        );
        assert!(last_error().unwrap().contains("data"));
    }
    let r = handle(2, 2, PsColorSpace::Gray, &data[..4]);
    assert!(last_error().is_none());
    unsafe {
        assert_eq!(ps_median(r, 4, &mut out), PsStatus::InvalidParameter);
        assert_eq!(ps_jpeg(r, 0, &mut out), PsStatus::InvalidParameter);
        assert_eq!(ps_jpeg(r, 50, ptr::null_mut()), PsStatus::NullPointer);
        assert_eq!(ps_defend(r, ptr::null(), &mut out), PsStatus::NullPointer);
        let mut cfg = std::mem::MaybeUninit::<PsConfig>::uninit();
        ps_config_default(cfg.as_mut_ptr());
        let mut cfg = cfg.assume_init();
        cfg.n_kernels = PS_MAX_KERNELS + 1;
        assert_eq!(ps_defend(r, &cfg, &mut out), PsStatus::InvalidParameter);
        cfg.n_kernels = 0;
        assert_eq!(ps_defend(r, &cfg, &mut out), PsStatus::InvalidParameter);

        let missing = CString::new("/nonexistent/dir/x.png").unwrap();
        assert_eq!(ps_raster_load(missing.as_ptr(), &mut out), PsStatus::Io);
        let odd = CString::new("/tmp/x.bmp").unwrap();
        assert_eq!(ps_raster_save(r, odd.as_ptr()), PsStatus::UnsupportedFormat);

        assert_eq!(ps_raster_width(ptr::null()), 0);
        assert!(ps_raster_data(ptr::null(), ptr::null_mut()).is_null());
        ps_raster_free(ptr::null_mut());
        ps_edges_free(ptr::null_mut());
        ps_raster_free(r);
    }
    assert!(out.is_null());
    let v = unsafe { CStr::from_ptr(ps_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_compiles_as_c() {
    let header = concat!(env!("CARGO_MANIFEST_DIR"), "/include/perturbshield.h");
    let Ok(cc) = std::process::Command::new("cc")
        .args(["-fsyntax-only", "-Wall", "-Werror", "-x", "c", header])
        .output()
    else {
        eprintln!("no C compiler; skipped");
        return;
    };
    assert!(
        cc.status.success(),
        "{}",
        String::from_utf8_lossy(&cc.stderr)
    );
}
