use std::ffi::{CStr, CString};
use std::ptr;

use ggmm_sr_ffi::*;

fn last_error() -> String {
    let p = ggmm_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn pattern(w: usize, h: usize) -> Vec<f64> {
    (0..w * h)
        .map(|i| {
            let (r, c) = ((i / w) as f64, (i % w) as f64);
            0.5 + 0.4 * (0.3 * c + 0.15 * r).sin() * (0.11 * r * c / 8.0).cos()
        })
        .collect()
}

unsafe fn image(w: usize, h: usize, px: &[f64]) -> *mut GgmmImage {
    let mut out = ptr::null_mut();
    assert_eq!(ggmm_image_new(w, h, px.as_ptr(), &mut out), GgmmStatus::Ok);
    out
}

#[test]
fn image_round_trip_through_file() {
    unsafe {
        let px: Vec<f64> = (0..12).map(|i| i as f64 / 255.0).collect();
        let img = image(4, 3, &px);
        assert_eq!((ggmm_image_width(img), ggmm_image_height(img)), (4, 3));
        let dir = tempfile::tempdir().unwrap();
        let path = CString::new(dir.path().join("a.pgm").to_str().unwrap()).unwrap();
        assert_eq!(ggmm_image_save(img, path.as_ptr()), GgmmStatus::Ok);
        let mut back = ptr::null_mut();
        assert_eq!(ggmm_image_load(path.as_ptr(), &mut back), GgmmStatus::Ok);
        let mut buf = vec![0.0; 12];
        assert_eq!(ggmm_image_copy_pixels(back, buf.as_mut_ptr(), 12), GgmmStatus::Ok);
        for (a, b) in buf.iter().zip(&px) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(ggmm_image_copy_pixels(back, buf.as_mut_ptr(), 5), GgmmStatus::InvalidArgument);
        let mut p = 0.0;
        assert_eq!(ggmm_psnr(img, back, 1.0, &mut p), GgmmStatus::Ok);
        assert!(p.is_infinite());
        ggmm_image_free(img);
        ggmm_image_free(back);
    }
}

#[test]
fn errors_map_to_status_codes() {
    unsafe {
        let mut out = ptr::null_mut();
        let px = [0.5; 4];
        assert_eq!(ggmm_image_new(2, 2, ptr::null(), &mut out), GgmmStatus::NullPointer);
        assert!(last_error().contains("null"));
        assert_eq!(ggmm_image_new(2, 2, px.as_ptr(), ptr::null_mut()), GgmmStatus::NullPointer);
        let bad = [f64::NAN; 4];
        assert_eq!(ggmm_image_new(2, 2, bad.as_ptr(), &mut out), GgmmStatus::Image);

        let missing = CString::new("/nonexistent/x.pgm").unwrap();
        assert_eq!(ggmm_image_load(missing.as_ptr(), &mut out), GgmmStatus::Io);

        let odd = image(3, 3, &[0.5; 9]);
        let mut lr = ptr::null_mut();
        assert_ne!(ggmm_degrade(odd, 2, 0.0, 0, &mut lr), GgmmStatus::Ok);
        assert!(lr.is_null());
        ggmm_image_free(odd);

        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.json");
        std::fs::write(&p, "{\"format_version\": 1}").unwrap();
        let path = CString::new(p.to_str().unwrap()).unwrap();
        let mut model = ptr::null_mut();
        assert_eq!(ggmm_model_load(path.as_ptr(), &mut model), GgmmStatus::Model);
        assert!(model.is_null());

        ggmm_image_free(ptr::null_mut());
        ggmm_model_free(ptr::null_mut());
        assert_eq!(ggmm_image_width(ptr::null()), 0);
    }
}

#[test]
fn train_and_super_resolve() {
    unsafe {
        let (w, h) = (48, 48);
        let hr = image(w, h, &pattern(w, h));
        let mut lr = ptr::null_mut();
        assert_eq!(ggmm_degrade(hr, 2, 0.0, 0, &mut lr), GgmmStatus::Ok);

        let mut cfg = ggmm_train_config_default();
        cfg.components = 2;
        cfg.max_outer_iters = 10;
        cfg.fix_beta = 1.0;
        let mut model = ptr::null_mut();
        let mut nll = f64::NAN;
        assert_eq!(ggmm_model_train(hr, lr, &cfg, &mut model, &mut nll), GgmmStatus::Ok);
        assert!(nll.is_finite());
        let mut betas = [0.0; 2];
        assert_eq!(ggmm_model_components(model), 2);
        assert_eq!(ggmm_model_betas(model, betas.as_mut_ptr(), 2), GgmmStatus::Ok);
        assert_eq!(betas, [1.0, 1.0]);

        let mut sr = ptr::null_mut();
        assert_eq!(ggmm_super_resolve(lr, model, &mut sr), GgmmStatus::Ok);
        assert_eq!((ggmm_image_width(sr), ggmm_image_height(sr)), (w, h));

        let mut nn = ptr::null_mut();
        assert_eq!(ggmm_upsample_nearest(lr, 2, &mut nn), GgmmStatus::Ok);
        let (mut p_sr, mut p_nn) = (0.0, 0.0);
        assert_eq!(ggmm_psnr(hr, sr, 1.0, &mut p_sr), GgmmStatus::Ok);
        assert_eq!(ggmm_psnr(hr, nn, 1.0, &mut p_nn), GgmmStatus::Ok);
        assert!(p_sr > p_nn, "{p_sr} vs {p_nn}");

        cfg.components = 100_000;
        let mut none = ptr::null_mut();
        assert_eq!(ggmm_model_train(hr, lr, &cfg, &mut none, ptr::null_mut()), GgmmStatus::InvalidArgument);

        for p in [hr, lr, sr, nn] {
            ggmm_image_free(p);
        }
        ggmm_model_free(model);
    }
}

#[test]
fn version_matches_package() {
    let v = unsafe { CStr::from_ptr(ggmm_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}
