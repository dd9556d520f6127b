use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use serde_json::{json, Value};

use sinefactor::expr::parse_expression;
use sinefactor::expsum::ExpSumJson;
use sinefactor::factorizer::{
    consistency_check, decompose_zero_set, peel_sine_factors, recover_form, verify_form,
    DEFAULT_GAP_TOL, DEFAULT_TOL,
};
use sinefactor::generators::{
    secular_expsum, secular_expsum_uncertified, SecularSpec, SecularSpecJson,
};
use sinefactor::logderiv::{
    default_radii, growth_profile, h_expansion_with, meyer_verdict, HConfig, MeyerAssessment,
    Precision,
};
use sinefactor::quasicrystal::{
    diffraction_entries, empirical_density, fourier_atoms, DiffractionReport, Weight,
};
use sinefactor::rootfinder::{locate_real_zeros, ZeroSet};
use sinefactor::{Error, ExpSum, HExpansion, HalfPlane, Result, Verdict, SCHEMA};

use crate::{CmdResult, Common, Format, FourierArgs, GenerateArgs, MeyerArgs};

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

fn read(path: &Path) -> Result<Value> {
    let text = fs::read_to_string(path)
        .map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?;
    Ok(serde_json::from_str(&text)?)
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => {
            fs::write(p, text).map_err(|e| invalid(format!("cannot write {}: {e}", p.display())))
        }
        None => match std::io::stdout().lock().write_all(text.as_bytes()) {
            Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => {
                Err(invalid(format!("cannot write to stdout: {e}")))
            }
            _ => Ok(()),
        },
    }
}

fn decls(c: &Common) -> Result<Vec<(String, String)>> {
    c.basis
        .iter()
        .map(|d| {
            d.split_once('=')
                .map(|(n, v)| (n.trim().to_string(), v.trim().to_string()))
                .ok_or_else(|| invalid(format!("basis declaration {d:?} is not name=decimal")))
        })
        .collect()
}

/// The input sum, from an expression, an exponential-sum file or a secular matrix description.
fn load(c: &Common) -> Result<ExpSum> {
    if let Some(p) = &c.expsum {
        let mut doc = read(p)?;
        // accept a report and take its embedded input
        if let Some(inner) = doc.get("input").cloned() {
            doc = inner;
        }
        let parsed: ExpSumJson = serde_json::from_value(doc)?;
        return ExpSum::from_json(&parsed);
    }
    if let Some(p) = &c.secular {
        let spec: SecularSpecJson = serde_json::from_value(read(p)?)?;
        return secular_expsum_uncertified(&SecularSpec::from_json(&spec)?);
    }
    match &c.expression {
        Some(text) => parse_expression(text, &decls(c)?),
        None => Err(invalid(
            "no input: give an expression, --expsum or --secular",
        )),
    }
}

fn window(c: &Common) -> Result<(f64, f64)> {
    let (a, b) = (c.window[0], c.window[1]);
    if !(a < b) {
        return Err(invalid(format!("window [{a}, {b}] is empty")));
    }
    Ok((a, b))
}

fn hconfig(c: &Common) -> HConfig {
    HConfig {
        precision: c
            .precision
            .map(Precision::Extended)
            .unwrap_or(Precision::Double),
        ..HConfig::default()
    }
}

fn expansions(q: &ExpSum, c: &Common) -> Result<(HExpansion, HExpansion)> {
    let cfg = hconfig(c);
    Ok((
        h_expansion_with(q, HalfPlane::Upper, c.cutoff, &cfg)?,
        h_expansion_with(q, HalfPlane::Lower, c.cutoff, &cfg)?,
    ))
}

fn settings(c: &Common) -> Value {
    json!({
        "cutoff": c.cutoff,
        "window": c.window,
        "eta": c.eta,
        "tol": c.tol,
        "precision": c.precision.map(|b| json!({"fixed_point_bits": b})).unwrap_or(json!("double")),
        "basis": c.basis,
    })
}

fn envelope(command: &str, q: &ExpSum, settings: Value, result: Value) -> Value {
    json!({
        "schema": SCHEMA,
        "command": command,
        "input": q.to_json(),
        "settings": settings,
        "result": result,
    })
}

fn write_json(out: Option<&Path>, doc: &Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(doc)?;
    text.push('\n');
    emit(out, &text)
}

pub fn parse(c: &Common) -> CmdResult {
    let q = load(c)?;
    if c.format == Some(Format::Csv) {
        let mut s = String::from("frequency,value,re,im\n");
        for t in q.terms() {
            let _ = writeln!(
                s,
                "{},{:.17e},{:.17e},{:.17e}",
                q.basis().render(&t.freq),
                t.value,
                t.coeff.re,
                t.coeff.im
            );
        }
        emit(c.out.as_deref(), &s)?;
        return Ok(0);
    }
    let (lo, hi) = q.spectrum_extremes()?;
    let result = json!({
        "terms": q.len(),
        "omega_minus": lo,
        "omega_plus": hi,
        "bandwidth": q.bandwidth(),
        "warnings": q.independence_warnings(),
    });
    write_json(
        c.out.as_deref(),
        &envelope("parse", &q, settings(c), result),
    )?;
    Ok(0)
}

fn expansion_csv(s: &mut String, e: &HExpansion) {
    let name = match e.halfplane {
        HalfPlane::Upper => "upper",
        HalfPlane::Lower => "lower",
    };
    let _ = writeln!(s, "{name},0,0,{:.17e},{:.17e}", e.h0.re, e.h0.im);
    for a in &e.atoms {
        let _ = writeln!(
            s,
            "{name},{},{:.17e},{:.17e},{:.17e}",
            e.basis.render(&a.gamma.vector),
            a.gamma.value,
            a.h.re,
            a.h.im
        );
    }
}

pub fn hcoeffs(c: &Common) -> CmdResult {
    let q = load(c)?;
    let (up, lo) = expansions(&q, c)?;
    if c.format == Some(Format::Csv) {
        let mut s = String::from("halfplane,gamma,value,re,im\n");
        expansion_csv(&mut s, &up);
        expansion_csv(&mut s, &lo);
        emit(c.out.as_deref(), &s)?;
        return Ok(0);
    }
    let result = json!({ "upper": up.to_json(), "lower": lo.to_json() });
    write_json(
        c.out.as_deref(),
        &envelope("hcoeffs", &q, settings(c), result),
    )?;
    Ok(0)
}

fn assess(up: &HExpansion, lo: &HExpansion, m: &MeyerArgs) -> Result<MeyerAssessment> {
    let report = growth_profile(up, lo, &default_radii(m.common.cutoff, m.radii))?;
    Ok(meyer_verdict(&report, m.slope_tol, m.span_factor))
}

fn meyer_settings(m: &MeyerArgs) -> Value {
    let mut s = settings(&m.common);
    s["radii"] = json!(m.radii);
    s["slope_tolerance"] = json!(m.slope_tol);
    s["span_factor"] = json!(m.span_factor);
    s
}

pub fn meyer(m: &MeyerArgs) -> CmdResult {
    let c = &m.common;
    let q = load(c)?;
    let (up, lo) = expansions(&q, c)?;
    let a = assess(&up, &lo, m)?;
    let code = if a.verdict == Verdict::Superlinear {
        1
    } else {
        0
    };
    if c.format == Some(Format::Csv) {
        emit(c.out.as_deref(), &a.report.to_csv())?;
    } else {
        write_json(
            c.out.as_deref(),
            &envelope("meyer", &q, meyer_settings(m), serde_json::to_value(&a)?),
        )?;
    }
    Ok(code)
}

pub fn roots(c: &Common) -> CmdResult {
    let q = load(c)?;
    let (a, b) = window(c)?;
    let zeros = locate_real_zeros(&q, a, b, c.eta)?;
    if c.format == Some(Format::Json) {
        let result = json!({
            "count": zeros.total_multiplicity(),
            "certified": zeros.certified,
            "unit_strip_counts": zeros.unit_strip_counts(),
            "zeros": zeros,
        });
        write_json(
            c.out.as_deref(),
            &envelope("roots", &q, settings(c), result),
        )?;
    } else {
        emit(c.out.as_deref(), &zeros.to_csv())?;
    }
    Ok(0)
}

fn weight(f: &FourierArgs) -> Result<Weight> {
    f.weight.parse()
}

fn fourier_settings(f: &FourierArgs) -> Value {
    let mut s = meyer_settings(&f.meyer);
    s["top_k"] = json!(f.top_k);
    s["weight"] = json!(f.weight);
    s
}

/// Diffraction table plus the density comparison over the zero set.
fn diffraction(
    q: &ExpSum,
    up: &HExpansion,
    lo: &HExpansion,
    zeros: Option<&ZeroSet>,
    f: &FourierArgs,
) -> Result<(Value, String, String)> {
    let measure = fourier_atoms(up, lo)?;
    let w = weight(f)?;
    let (omega_lo, omega_hi) = q.spectrum_extremes()?;
    let mut report = DiffractionReport {
        entries: Vec::new(),
        window_l: 0.0,
        weight_name: w.name().into(),
        cutoff: up.cutoff,
    };
    let mut density = Value::Null;
    if let Some(z) = zeros {
        report.window_l = sinefactor::quasicrystal::half_width(z);
        if !measure.is_empty() {
            report.entries = diffraction_entries(&measure, z, f.top_k, w)?;
        }
        let span = z.window.1 - z.window.0;
        density = json!({
            "formula": omega_hi.value - omega_lo.value,
            "empirical": empirical_density(z),
            "tolerance": 4.0 / span,
        });
    }
    let value = json!({
        "atoms": measure.to_json(),
        "mass_at_zero": measure.mass_at_zero(),
        "hermitian_defect": measure.hermitian_defect(),
        "diffraction": report,
        "max_abs_error": report.max_abs_error(),
        "density": density,
    });
    Ok((value, report.to_csv(), measure.plot_data()))
}

fn symmetric_zeros(q: &ExpSum, c: &Common) -> Result<ZeroSet> {
    let (a, b) = window(c)?;
    let l = (-a).min(b);
    if !(l > 0.0) {
        return Err(invalid("the window must contain the origin"));
    }
    locate_real_zeros(q, -l, l, c.eta)
}

pub fn fourier(f: &FourierArgs) -> CmdResult {
    let c = &f.meyer.common;
    let q = load(c)?;
    let (up, lo) = expansions(&q, c)?;
    let zeros = symmetric_zeros(&q, c)?;
    if !zeros.certified {
        return Err(Error::RequiresCertification);
    }
    let (value, csv, plot) = diffraction(&q, &up, &lo, Some(&zeros), f)?;
    if let Some(p) = &f.plot {
        emit(Some(p), &plot)?;
    }
    if c.format == Some(Format::Csv) {
        emit(c.out.as_deref(), &csv)?;
    } else {
        write_json(
            c.out.as_deref(),
            &envelope("fourier", &q, fourier_settings(f), value),
        )?;
    }
    Ok(0)
}

/// Peel, recover and verify; `Ok(Err(..))` carries a negative outcome.
fn attempt_factor(
    q: &ExpSum,
    up: &HExpansion,
    tol: f64,
) -> Result<std::result::Result<Value, Value>> {
    match peel_sine_factors(up, tol) {
        Ok((factors, residual)) => {
            let form = recover_form(q, &factors)?.canonical();
            let check = verify_form(q, &form, 64)?;
            let body = json!({
                "form": form.to_json(),
                "verification": check,
                "residual_mass": residual.total_mass(),
            });
            if check.max_residual <= tol {
                Ok(Ok(body))
            } else {
                let mut b = body;
                b["outcome"] = json!("NotASineProduct");
                b["reason"] = json!("recovered form does not reproduce the input");
                Ok(Err(b))
            }
        }
        Err(Error::NotASineProduct {
            reason,
            residual_mass,
            residual,
        }) => Ok(Err(json!({
            "outcome": "NotASineProduct",
            "reason": reason,
            "residual_mass": residual_mass,
            "residual": residual.to_json(),
        }))),
        Err(e) => Err(e),
    }
}

pub fn factor(c: &Common) -> CmdResult {
    let q = load(c)?;
    let up = h_expansion_with(&q, HalfPlane::Upper, c.cutoff, &hconfig(c))?;
    let tol = if c.tol > 0.0 { c.tol } else { DEFAULT_TOL };
    let (code, mut result) = match attempt_factor(&q, &up, tol)? {
        Ok(v) => (0, v),
        Err(v) => (1, v),
    };
    if code == 0 {
        result["outcome"] = json!("SineProduct");
    }
    if c.format == Some(Format::Csv) {
        let mut s = String::from("alpha,alpha_over_pi,beta,multiplicity\n");
        if let Some(fs) = result["form"]["factors"].as_array() {
            for f in fs {
                let _ = writeln!(
                    s,
                    "{},{},{},{}",
                    f["alpha"],
                    f["alpha_over_pi"].to_string().replace(',', " "),
                    f["beta"],
                    f["multiplicity"]
                );
            }
        }
        emit(c.out.as_deref(), &s)?;
    } else {
        write_json(
            c.out.as_deref(),
            &envelope("factor", &q, settings(c), result),
        )?;
    }
    Ok(code)
}

pub fn generate(g: &GenerateArgs) -> CmdResult {
    let spec = if g.lengths.is_empty() {
        if !(1..=sinefactor::generators::MAX_SECULAR_DIM).contains(&g.n) {
            return Err(invalid(format!("n = {} outside 1..=6", g.n)));
        }
        SecularSpec::standard_incommensurable(g.n, g.seed)
    } else {
        SecularSpec::new(g.lengths.clone(), g.seed)?
    };
    let spec = if g.scale != 1.0 {
        spec.scaled(g.scale)
    } else {
        spec
    };
    let mut doc = if g.expand {
        serde_json::to_value(secular_expsum(&spec)?.to_json())?
    } else {
        serde_json::to_value(spec.to_json())?
    };
    doc["schema"] = json!(SCHEMA);
    write_json(g.out.as_deref(), &doc)?;
    Ok(0)
}

pub fn report(f: &FourierArgs) -> CmdResult {
    let m = &f.meyer;
    let c = &m.common;
    let q = load(c)?;
    let (up, lo) = expansions(&q, c)?;
    let verdict = assess(&up, &lo, m)?;
    let (a, b) = window(c)?;
    let zeros = locate_real_zeros(&q, a, b, c.eta)?;
    let (fourier, _, _) = if zeros.certified && a < 0.0 && b > 0.0 {
        diffraction(&q, &up, &lo, Some(&zeros), f)?
    } else {
        diffraction(&q, &up, &lo, None, f)?
    };
    let tol = if c.tol > 0.0 { c.tol } else { DEFAULT_TOL };
    let factorization = attempt_factor(&q, &up, tol)?;
    let not_product = factorization.is_err();
    let mut fact = factorization.unwrap_or_else(|v| v);
    if !not_product {
        fact["outcome"] = json!("SineProduct");
        if zeros.certified && zeros.total_multiplicity() >= 20 {
            match decompose_zero_set(&zeros, DEFAULT_GAP_TOL) {
                Ok(set) => {
                    let form = sinefactor::SineProductForm::from_json(&serde_json::from_value(
                        fact["form"].clone(),
                    )?)?;
                    fact["progressions"] = serde_json::to_value(&set)?;
                    fact["consistency"] =
                        serde_json::to_value(consistency_check(&form, &set, false))?;
                }
                Err(e) => {
                    fact["progressions"] = json!({ "error": e.kind(), "message": e.to_string() })
                }
            }
        }
    }
    let result = json!({
        "meyer": verdict,
        "zeros": {
            "count": zeros.total_multiplicity(),
            "rect_count": zeros.rect_count,
            "certified": zeros.certified,
            "unit_strip_counts": zeros.unit_strip_counts(),
            "zero_set": zeros,
        },
        "fourier": fourier,
        "factorization": fact,
    });
    write_json(
        c.out.as_deref(),
        &envelope("report", &q, fourier_settings(f), result),
    )?;
    Ok(if verdict.verdict == Verdict::Superlinear || not_product {
        1
    } else {
        0
    })
}
