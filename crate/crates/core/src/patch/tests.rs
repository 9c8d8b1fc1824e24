use super::*;

fn c(re: f64) -> Complex {
    Complex::new(re, 0.0)
}

#[test]
fn impedance_matrix_is_symmetric_and_passive() {
    let (geom, _) = scenario(Preset::AntIV {
        dphi_deg: 82.0,
        cm: DEFAULT_CM,
    });
    let sol = CavitySolution::new(&geom, &CavityOptions::default(), 2.45e9).unwrap();
    let z = sol.impedance_matrix();
    assert_eq!(z[(0, 1)], z[(1, 0)]);
    assert!(z[(0, 0)].re > 0.0 && z[(1, 1)].re > 0.0);
}

#[test]
fn energy_closes_for_every_preset() {
    for preset in [
        Preset::AntI,
        Preset::AntII,
        Preset::AntIII { dphi_deg: 90.0 },
        Preset::AntIV {
            dphi_deg: 82.0,
            cm: DEFAULT_CM,
        },
    ] {
        let (geom, exc) = scenario(preset);
        let b = power_budget(&geom, &CavityOptions::default(), &exc, 2.45e9).unwrap();
        assert!(b.closure_error() < 1e-6, "{preset:?}: {b:?}");
        assert!(b.eta > 0.0 && b.eta < 1.0);
    }
}

#[test]
fn superposition_of_drives_is_linear() {
    let (geom, _) = scenario(Preset::AntIII { dphi_deg: 0.0 });
    let sol = CavitySolution::new(&geom, &CavityOptions::default(), 2.45e9).unwrap();
    let a = sol.drive(&[c(1.0), c(0.0)]).unwrap();
    let b = sol.drive(&[c(0.0), c(1.0)]).unwrap();
    let w = Complex::from_polar(0.7, 1.1);
    let both = sol.drive(&[c(0.3), w]).unwrap();
    let comb = DriveState::combine(&[(&a, c(0.3)), (&b, w)]);
    let scale = both.modal.norm();
    assert!((both.modal - comb.modal).norm() < 1e-12 * scale);
}

#[test]
fn far_field_power_agrees_with_radiation_form() {
    let (geom, exc) = scenario(Preset::AntIII { dphi_deg: 90.0 });
    let sol = CavitySolution::new(&geom, &CavityOptions::default(), 2.45e9).unwrap();
    let state = sol.excite(&exc).unwrap();
    let b = sol.power_budget(&state).unwrap();
    let ff = sol.far_field(&state).hemisphere_power();
    assert!(((ff - b.p_rad) / b.p_rad).abs() < 5e-3, "{ff} vs {}", b.p_rad);
}

#[test]
fn lossless_cavity_is_rejected() {
    let (mut geom, exc) = scenario(Preset::AntI);
    geom.sub.tan_d = 0.0;
    geom.sub.sigma = f64::INFINITY;
    let opts = CavityOptions {
        radiation: false,
        ..CavityOptions::default()
    };
    assert!(matches!(effective_loss(&geom, &opts, 2.45e9), Err(Error::Domain(_))));
    assert!(power_budget(&geom, &opts, &exc, 2.45e9).is_err());
}

#[test]
fn feed_outside_patch_is_rejected() {
    let (mut geom, _) = scenario(Preset::AntI);
    geom.ports[0].x = 0.02;
    assert!(matches!(geom.validate(), Err(Error::Domain(_))));
}

fn ant3() -> (PatchGeometry, ExcitationSet) {
    scenario(Preset::AntIII { dphi_deg: 90.0 })
}

#[test]
fn presets_place_feeds_and_loads() {
    let (g1, e1) = scenario(Preset::AntI);
    assert_eq!(g1.ports.len(), 1);
    assert!((g1.ports[0].x - 1.15e-3).abs() < 1e-15 && (g1.ports[0].y - 1.15e-3).abs() < 1e-15);
    assert_eq!(e1.drives().len(), 1);
    let (g3, e3) = ant3();
    assert_eq!(g3.ports.len(), 2);
    assert!(g3.loads.is_empty());
    let d = e3.drives();
    assert!((d[0].norm() - d[1].norm()).abs() < 1e-15);
    assert!((e3.phase_difference_deg().unwrap() - 90.0).abs() < 1e-12);
    let (g4, _) = scenario(Preset::AntIV {
        dphi_deg: 82.0,
        cm: DEFAULT_CM,
    });
    assert_eq!(g4.loads.len(), 1);
    assert_eq!(g4.loads[0].capacitance, 1.1e-12);
    assert!(matches!(Preset::from_name("ant9", None, None), Err(Error::Domain(_))));
    assert_eq!(
        Preset::from_name("ANT4", Some(90.0), Some(1.4e-12)).unwrap(),
        Preset::AntIV {
            dphi_deg: 90.0,
            cm: 1.4e-12
        }
    );
}

#[test]
fn feed_on_cosine_null_decouples_mode() {
    let mut geom = scenario(Preset::AntI).0;
    geom.ports[0].x = geom.length / 2.0;
    let opts = |modes: Vec<(usize, usize)>| CavityOptions {
        modes: ModeSet::Explicit(modes),
        fringe_extension: false,
        ..CavityOptions::default()
    };
    let with = impedance_matrix(&geom, &opts(vec![(0, 1), (1, 0)]), 2.45e9).unwrap()[(0, 0)];
    let without = impedance_matrix(&geom, &opts(vec![(0, 1)]), 2.45e9).unwrap()[(0, 0)];
    // radiation couples the modes, so the null holds to rounding only
    assert!((with - without).norm() < 1e-9 * without.norm(), "{with} vs {without}");
}

#[test]
fn loss_channels_compose() {
    let (mut geom, _) = scenario(Preset::AntI);
    let f = 2.45e9;
    let b = effective_loss(&geom, &CavityOptions::default(), f).unwrap();
    assert!(b.delta_eff() >= 0.025);
    geom.sub.sigma *= 2.0;
    let doubled = effective_loss(&geom, &CavityOptions::default(), f).unwrap();
    assert!((doubled.inv_q_cond * 2f64.sqrt() - b.inv_q_cond).abs() < 1e-15);
    geom.sub.sigma = f64::INFINITY;
    let opts = CavityOptions {
        radiation: false,
        ..CavityOptions::default()
    };
    assert_eq!(effective_loss(&geom, &opts, f).unwrap().delta_eff(), 0.025);
}

#[test]
fn radiation_only_cavity_is_fully_efficient() {
    let (mut geom, exc) = ant3();
    geom.sub.tan_d = 0.0;
    geom.sub.sigma = f64::INFINITY;
    let b = power_budget(&geom, &CavityOptions::default(), &exc, 2.45e9).unwrap();
    assert!((b.eta - 1.0).abs() < 1e-6);
    assert_eq!(b.p_diel, 0.0);
    assert_eq!(b.p_cond, 0.0);
}

#[test]
fn efficiency_falls_with_dielectric_loss() {
    let (mut geom, exc) = ant3();
    let mut last = f64::INFINITY;
    for tan_d in [0.0, 0.001, 0.01, 0.025, 0.05] {
        geom.sub.tan_d = tan_d;
        let eta = power_budget(&geom, &CavityOptions::default(), &exc, 2.45e9)
            .unwrap()
            .eta;
        assert!(eta < last, "tan_d {tan_d}: {eta} !< {last}");
        last = eta;
    }
}

#[test]
fn powers_are_quadratic_in_drive() {
    let (geom, exc) = ant3();
    let sol = CavitySolution::new(&geom, &CavityOptions::default(), 2.45e9).unwrap();
    let a = sol.excite(&exc).unwrap();
    let alpha = Complex::from_polar(2.5, 0.7);
    let scaled: Vec<Complex> = exc.drives().iter().map(|d| d * alpha).collect();
    let b = sol.drive(&scaled).unwrap();
    let (pa, pb) = (sol.power_budget(&a).unwrap(), sol.power_budget(&b).unwrap());
    let k = alpha.norm_sqr();
    for (x, y) in [
        (pa.p_rad, pb.p_rad),
        (pa.p_diel, pb.p_diel),
        (pa.p_cond, pb.p_cond),
        (pa.p_in, pb.p_in),
    ] {
        assert!((y - k * x).abs() < 1e-12 * y.abs());
    }
    assert!((pa.eta - pb.eta).abs() < 1e-12);
}

#[test]
fn single_mode_efficiency_matches_quality_factors() {
    let (geom, _) = scenario(Preset::AntI);
    let opts = CavityOptions {
        modes: ModeSet::Explicit(vec![(1, 0)]),
        probe_reactance: false,
        ..CavityOptions::default()
    };
    let dims = cavity_dims(&geom, true);
    let f_r = PI / dims.l * crate::units::C0 / (2.0 * PI * geom.sub.er.sqrt());
    let losses = effective_loss(&geom, &opts, f_r).unwrap();
    let budget = power_budget(&geom, &opts, &ExcitationSet::new(vec![c(1.0)]).unwrap(), f_r).unwrap();
    let predicted = losses.inv_q_rad / losses.delta_eff();
    assert!(
        ((budget.eta - predicted) / predicted).abs() < 0.05,
        "{} vs {predicted}",
        budget.eta
    );
}

#[test]
fn symmetric_feed_gives_mirrored_current() {
    let (mut geom, _) = scenario(Preset::AntII);
    geom.ports[0].x = geom.length / 2.0;
    let exc = ExcitationSet::new(vec![c(1.0)]).unwrap();
    let grid = surface_current_grid(&geom, &CavityOptions::default(), &exc, 2.45e9, 21, 15).unwrap();
    let peak = grid.max_magnitude();
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let d = (grid.magnitude(i, j) - grid.magnitude(grid.nx - 1 - i, j)).abs();
            assert!(d < 1e-9 * peak, "({i},{j}) asymmetry {d}");
        }
    }
}

#[test]
fn zero_drive_gives_zero_field() {
    let (geom, _) = ant3();
    let sol = CavitySolution::new(&geom, &CavityOptions::default(), 2.45e9).unwrap();
    let state = sol.drive(&[c(0.0), c(0.0)]).unwrap();
    let grid = sol.surface_current_grid(&state, 4, 4).unwrap();
    assert_eq!(grid.max_magnitude(), 0.0);
    assert!(sol.power_budget(&state).is_err());
    assert!(far_field_pattern(&sol, &state, PatternCut::Xoz).is_err());
    assert!(sol.surface_current_grid(&state, 1, 4).is_err());
}

#[test]
fn pure_dominant_mode_radiates_like_two_slots() {
    let (geom, _) = scenario(Preset::AntI);
    let opts = CavityOptions {
        modes: ModeSet::Explicit(vec![(1, 0)]),
        ..CavityOptions::default()
    };
    let f = 2.45e9;
    let sol = CavitySolution::new(&geom, &opts, f).unwrap();
    let ff = sol.far_field_from_modal(&DVector::from_element(1, c(1.0)));
    let k0 = 2.0 * PI * f / crate::units::C0;
    let u0 = ff.intensity(0.0, 0.0);
    for deg in (0..=90).step_by(5) {
        let t = (deg as f64).to_radians();
        let expected = (k0 * sol.dims.l * t.sin() / 2.0).cos().powi(2);
        assert!((ff.intensity(t, 0.0) / u0 - expected).abs() < 1e-9, "theta {deg}");
    }
}

#[test]
fn pattern_cuts_have_expected_shape() {
    let (geom, exc) = ant3();
    let sol = CavitySolution::new(&geom, &CavityOptions::default(), 2.45e9).unwrap();
    let state = sol.excite(&exc).unwrap();
    let xoz = far_field_pattern(&sol, &state, PatternCut::Xoz).unwrap();
    assert_eq!(xoz.samples.len(), 181);
    assert!(xoz.samples.iter().all(|s| s.intensity >= 0.0));
    let xoy = far_field_pattern(&sol, &state, PatternCut::Xoy).unwrap();
    assert_eq!(xoy.samples.len(), 360);
    assert_eq!(xoz.p_rad, xoy.p_rad);
}

#[test]
fn phase_sweep_is_periodic_and_needs_two_ports() {
    let (geom, _) = ant3();
    let opts = CavityOptions::default();
    let grid = [0.0, 45.0, 90.0, 360.0, 405.0, 450.0];
    let pts = phase_sweep(&geom, &opts, [1.0, 1.0], 2.45e9, &grid).unwrap();
    for k in 0..3 {
        assert!((pts[k].eta() - pts[k + 3].eta()).abs() < 1e-12);
    }
    let flat = phase_sweep(&geom, &opts, [1.0, 0.0], 2.45e9, &grid).unwrap();
    assert!(flat.iter().all(|p| (p.eta() - flat[0].eta()).abs() < 1e-12));
    let (single, _) = scenario(Preset::AntI);
    assert!(matches!(
        phase_sweep(&single, &opts, [1.0, 1.0], 2.45e9, &grid),
        Err(Error::Domain(_))
    ));
}

#[test]
fn scalar_loss_model_is_passive() {
    let (geom, _) = scenario(Preset::AntIV {
        dphi_deg: 82.0,
        cm: DEFAULT_CM,
    });
    let opts = CavityOptions {
        loss_model: LossModel::Scalar,
        ..CavityOptions::default()
    };
    for f in [2.3e9, 2.45e9, 2.6e9] {
        let z = impedance_matrix(&geom, &opts, f).unwrap();
        assert!(z[(0, 0)].re > 0.0 && z[(1, 1)].re > 0.0);
        assert_eq!(z[(0, 1)], z[(1, 0)]);
    }
}

#[test]
fn single_port_divider_impedance_is_z11() {
    let (geom, _) = scenario(Preset::AntI);
    let sol = CavitySolution::new(&geom, &CavityOptions::default(), 2.45e9).unwrap();
    let zin = divider_input_impedance(&sol, &[c(1.0)], 50.0).unwrap();
    let z11 = sol.impedance_matrix()[(0, 0)];
    assert!((zin - z11).norm() < 1e-9 * z11.norm());
}

#[test]
fn sweep_summary_names_extremes() {
    let mk = |dphi_deg: f64, eta: f64| SweepPoint {
        dphi_deg,
        budget: PowerBudget {
            p_rad: eta,
            p_diel: 1.0 - eta,
            p_cond: 0.0,
            p_in: 1.0,
            eta,
        },
    };
    let pts = [mk(0.0, 0.1), mk(60.0, 0.08), mk(90.0, 0.2), mk(180.0, 0.25)];
    let s = SweepSummary::new(&pts).unwrap();
    assert_eq!((s.argmax_deg, s.argmin_deg), (180.0, 60.0));
    assert!((s.variation_db - 10.0 * (0.25f64 / 0.08).log10()).abs() < 1e-12);
    assert_eq!(s.high_window_wins(), Some(true));
    assert!(s.describe().contains("at dphi = 180 deg"));
    assert!(SweepSummary::new(&[]).is_err());
}
