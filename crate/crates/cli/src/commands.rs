//! One handler per subcommand. Handlers take the resolved configuration,
//! emit a report in the configured format on stdout, and reserve stderr
//! for context lines and structured errors.

use abelia_core::abelian_fields::AbelianExtension;
use abelia_core::bound_calculus::{
    final_delta, grh_crossover_rank, saving_table, BaseField, DeltaPolicy, DEFAULT_BETA,
    DEFAULT_GAMMA,
};
use abelia_core::group_module_algebra::verify_decomposition;
use abelia_core::prime_counting::{
    brun_titchmarsh_grid, classify_good_bad, pi_progression, pigeonhole_report, PrimeSieve,
    DEFAULT_GOODBAD_C,
};
use abelia_core::quadratic_class_groups::{
    class_group, is_fundamental, reduced_definite_forms, ClassGroupStructure,
};
use abelia_core::torsion_pipeline::{
    family_scan, multiquadratic_torsion, second_layer_consistency,
};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use rayon::prelude::*;
use serde_json::json;

use crate::config::{parse_rational, OutputFormat, RunConfig};
use crate::report::{fmt_sig, joined, print_csv, print_json, CliError};

fn unit_fraction(d: u64) -> BigRational {
    BigRational::new(BigInt::one(), BigInt::from(d))
}

fn as_f64(q: &BigRational) -> f64 {
    q.to_f64().expect("ratio fits in f64")
}

fn base_field(beta: Option<&str>, gamma: Option<&str>) -> Result<BaseField, CliError> {
    if beta.is_none() && gamma.is_none() {
        return Ok(BaseField::Rationals);
    }
    let beta = match beta {
        Some(s) => parse_rational(s)?,
        None => BigRational::from_integer(DEFAULT_BETA.into()),
    };
    let gamma = match gamma {
        Some(s) => parse_rational(s)?,
        None => BigRational::from_integer(DEFAULT_GAMMA.into()),
    };
    Ok(BaseField::General { beta, gamma })
}

pub fn bounds_delta(
    config: &RunConfig,
    ell: u64,
    p: u64,
    r: u32,
    beta: Option<String>,
    gamma: Option<String>,
) -> Result<(), CliError> {
    let base = base_field(beta.as_deref(), gamma.as_deref())?;
    let fd = final_delta(ell, p, r, &base, &config.delta_policy)?;
    let (alternative, alternative_source) = match &fd.alternative {
        Some((value, source)) => (Some(value.to_string()), Some(source.clone())),
        None => (None, None),
    };
    match config.output_format {
        OutputFormat::Json => print_json(&json!({
            "ell": fd.ell,
            "ell_reduced": fd.ell_reduced,
            "p": fd.p,
            "r": fd.r,
            "delta": fd.delta.to_string(),
            "delta_value": as_f64(&fd.delta),
            "source": fd.source,
            "alternative": alternative,
            "alternative_source": alternative_source,
            "grh_delta": fd.grh_delta.to_string(),
            "grh_delta_value": as_f64(&fd.grh_delta),
        })),
        OutputFormat::Csv => print_csv(
            &[
                "ell",
                "ell_reduced",
                "p",
                "r",
                "delta",
                "delta_value",
                "source",
                "alternative",
                "alternative_source",
                "grh_delta",
            ],
            &[vec![
                fd.ell.to_string(),
                fd.ell_reduced.to_string(),
                fd.p.to_string(),
                fd.r.to_string(),
                fd.delta.to_string(),
                fmt_sig(as_f64(&fd.delta)),
                fd.source.clone(),
                alternative.unwrap_or_default(),
                alternative_source.unwrap_or_default(),
                fd.grh_delta.to_string(),
            ]],
        ),
    }
    Ok(())
}

pub fn bounds_table(config: &RunConfig, ell_max: u64, p_list: Vec<u64>) -> Result<(), CliError> {
    if ell_max < 2 {
        return Err(CliError::Usage("ell-max must be at least 2".to_owned()));
    }
    if p_list.is_empty() {
        return Err(CliError::Usage("p-list must name at least one prime".to_owned()));
    }
    let ells: Vec<u64> = (2..=ell_max).collect();
    let rows = saving_table(&ells, &p_list, &BaseField::Rationals, &config.delta_policy)?;
    match config.output_format {
        OutputFormat::Json => print_json(&json!({
            "ell_max": ell_max,
            "p_list": p_list,
            "rows": serde_json::to_value(&rows).expect("serializable rows"),
        })),
        OutputFormat::Csv => {
            let cells: Vec<Vec<String>> = rows
                .iter()
                .map(|row| {
                    vec![
                        row.ell.to_string(),
                        row.ell_reduced.to_string(),
                        row.p.to_string(),
                        row.r.to_string(),
                        row.eta0.clone(),
                        row.delta.clone(),
                        fmt_sig(row.delta_value),
                        row.grh_delta.clone(),
                        row.r0.to_string(),
                        row.source.clone(),
                        row.rank2_delta.clone().unwrap_or_default(),
                        row.rank3_exceeds_rank2.map(|b| b.to_string()).unwrap_or_default(),
                    ]
                })
                .collect();
            print_csv(
                &[
                    "ell",
                    "ell_reduced",
                    "p",
                    "r",
                    "eta0",
                    "delta",
                    "delta_value",
                    "grh_delta",
                    "r0",
                    "source",
                    "rank2_delta",
                    "rank3_exceeds_rank2",
                ],
                &cells,
            );
        }
    }
    Ok(())
}

pub fn bounds_crossover(
    config: &RunConfig,
    ell: u64,
    p: u64,
    alternative: bool,
) -> Result<(), CliError> {
    let report =
        grh_crossover_rank(ell, p, &BaseField::Rationals, &config.delta_policy, alternative)?;
    match config.output_format {
        OutputFormat::Json => print_json(&json!({
            "ell": report.ell,
            "p": report.p,
            "delta": report.delta.to_string(),
            "delta_value": as_f64(&report.delta),
            "used_alternative": report.used_alternative,
            "r0": report.r0,
            "validity_note": report.validity_note,
        })),
        OutputFormat::Csv => print_csv(
            &["ell", "p", "delta", "delta_value", "used_alternative", "r0", "validity_note"],
            &[vec![
                report.ell.to_string(),
                report.p.to_string(),
                report.delta.to_string(),
                fmt_sig(as_f64(&report.delta)),
                report.used_alternative.to_string(),
                report.r0.to_string(),
                report.validity_note.unwrap_or_default(),
            ]],
        ),
    }
    Ok(())
}

pub fn torsion_field(config: &RunConfig, discs: Vec<i64>, ell: u64) -> Result<(), CliError> {
    let ext = AbelianExtension::from_quadratic_discriminants(&discs)?;
    let cache = config.open_cache()?;
    let report = multiquadratic_torsion(
        &ext,
        ell,
        config.classgroup_disc_bound,
        &cache,
        &config.delta_policy,
    )?;
    let subfield_discs: Vec<i64> = report.subfield_torsions.iter().map(|&(d, _)| d).collect();
    let torsions: Vec<u64> = report.subfield_torsions.iter().map(|&(_, t)| t).collect();
    let half_minus_delta = 0.5 - as_f64(&report.delta_ref);
    match config.output_format {
        OutputFormat::Json => print_json(&json!({
            "field": report.extension.encode(),
            "ell": report.ell,
            "subfield_discs": subfield_discs,
            "subfield_torsions": torsions,
            "total": report.total.to_string(),
            "disc_l": report.disc_l.to_string(),
            "exponent": report.exponent,
            "delta_ref": report.delta_ref.to_string(),
            "half_minus_delta": half_minus_delta,
            "method": report.method,
        })),
        OutputFormat::Csv => print_csv(
            &[
                "field",
                "ell",
                "disc_l",
                "subfield_discs",
                "subfield_torsions",
                "total",
                "exponent",
                "half_minus_delta",
            ],
            &[vec![
                report.extension.encode(),
                report.ell.to_string(),
                report.disc_l.to_string(),
                joined(&subfield_discs),
                joined(&torsions),
                report.total.to_string(),
                fmt_sig(report.exponent),
                fmt_sig(half_minus_delta),
            ]],
        ),
    }
    Ok(())
}

pub fn torsion_scan(
    config: &RunConfig,
    cond_max: u64,
    rank: u32,
    ell: u64,
) -> Result<(), CliError> {
    let cache = config.open_cache()?;
    let scan = family_scan(
        cond_max,
        rank,
        ell,
        config.classgroup_disc_bound,
        &cache,
        &config.delta_policy,
    )?;
    match config.output_format {
        OutputFormat::Json => {
            print_json(&serde_json::to_value(&scan).expect("serializable scan"));
        }
        OutputFormat::Csv => {
            let cells: Vec<Vec<String>> = scan
                .rows
                .iter()
                .map(|row| {
                    vec![
                        row.disc_l.clone(),
                        joined(&row.subfield_discs),
                        joined(&row.subfield_torsions),
                        row.total.clone(),
                        fmt_sig(row.exponent),
                        fmt_sig(row.half_minus_delta),
                    ]
                })
                .collect();
            print_csv(
                &[
                    "disc_L",
                    "subfield_discs",
                    "subfield_torsions",
                    "total",
                    "exponent",
                    "half_minus_delta",
                ],
                &cells,
            );
            eprintln!(
                "max observed exponent {} against reference exponent 1/2 - delta = {}",
                fmt_sig(scan.max_exponent),
                fmt_sig(scan.half_minus_delta)
            );
            eprintln!("{}", scan.caption);
        }
    }
    Ok(())
}

pub fn primes_pi(
    config: &RunConfig,
    x: u64,
    q: Option<u64>,
    a: Option<u64>,
) -> Result<(), CliError> {
    let sieve = config.sieve_for(x)?;
    let (q, a) = (q.unwrap_or(1), a.unwrap_or(0));
    let count = pi_progression(&sieve, x, q, a)?;
    match config.output_format {
        OutputFormat::Json => print_json(&json!({ "x": x, "q": q, "a": a, "count": count })),
        OutputFormat::Csv => print_csv(
            &["x", "q", "a", "count"],
            &[vec![x.to_string(), q.to_string(), a.to_string(), count.to_string()]],
        ),
    }
    Ok(())
}

pub fn primes_bt_check(config: &RunConfig, grid: u64) -> Result<(), CliError> {
    let x_max = config.sieve_limit;
    let sieve = PrimeSieve::new(x_max);
    let report = brun_titchmarsh_grid(&sieve, grid, x_max)?;
    match config.output_format {
        OutputFormat::Json => {
            print_json(&serde_json::to_value(&report).expect("serializable report"));
        }
        OutputFormat::Csv => {
            let tight = report.max_ratio_cell.as_ref();
            print_csv(
                &[
                    "q_max",
                    "x_max",
                    "cells_checked",
                    "violations",
                    "tightest_q",
                    "tightest_a",
                    "tightest_x",
                    "tightest_ratio",
                ],
                &[vec![
                    report.q_max.to_string(),
                    report.x_max.to_string(),
                    report.cells_checked.to_string(),
                    report.violations.len().to_string(),
                    tight.map(|c| c.q.to_string()).unwrap_or_default(),
                    tight.map(|c| c.a.to_string()).unwrap_or_default(),
                    tight.map(|c| c.x.to_string()).unwrap_or_default(),
                    tight.map(|c| fmt_sig(c.ratio)).unwrap_or_default(),
                ]],
            );
        }
    }
    if !report.violations.is_empty() {
        return Err(CliError::Identity(format!(
            "{} grid cells exceed the Brun-Titchmarsh bound",
            report.violations.len()
        )));
    }
    Ok(())
}

pub fn primes_goodbad(
    config: &RunConfig,
    ext: &str,
    theta: f64,
    c: Option<f64>,
) -> Result<(), CliError> {
    let field = AbelianExtension::parse(ext)?;
    if !(theta >= 0.0) {
        return Err(CliError::Usage(format!("theta must be nonnegative, got {theta}")));
    }
    let disc = field.discriminant().to_f64().unwrap_or(f64::INFINITY);
    let y_floor = disc.powf(theta).floor() as u64;
    let sieve = config.sieve_for(y_floor)?;
    let verdict = classify_good_bad(&sieve, &field, theta, c.unwrap_or(DEFAULT_GOODBAD_C))?;
    match config.output_format {
        OutputFormat::Json => {
            print_json(&serde_json::to_value(&verdict).expect("serializable verdict"));
        }
        OutputFormat::Csv => print_csv(
            &[
                "field",
                "disc",
                "theta",
                "c",
                "y",
                "y_floor",
                "split_count",
                "threshold",
                "verdict",
            ],
            &[vec![
                verdict.field.clone(),
                verdict.disc.clone(),
                fmt_sig(verdict.theta),
                fmt_sig(verdict.c),
                fmt_sig(verdict.y),
                verdict.y_floor.to_string(),
                verdict.split_count.to_string(),
                fmt_sig(verdict.threshold),
                format!("{:?}", verdict.verdict),
            ]],
        ),
    }
    Ok(())
}

pub fn primes_pigeonhole(config: &RunConfig, ext: &str, x: u64) -> Result<(), CliError> {
    let field = AbelianExtension::parse(ext)?;
    let sieve = config.sieve_for(x)?;
    let report = pigeonhole_report(&sieve, &field, x)?;
    match config.output_format {
        OutputFormat::Json => {
            print_json(&serde_json::to_value(&report).expect("serializable report"));
        }
        OutputFormat::Csv => {
            let cells: Vec<Vec<String>> = report
                .tallies
                .iter()
                .map(|tally| {
                    vec![
                        report.shape.clone(),
                        report.x.to_string(),
                        report.base.clone(),
                        report.inert_count.to_string(),
                        report.required_splits_per_prime.to_string(),
                        report.violations.to_string(),
                        report.max_share.clone().unwrap_or_default(),
                        tally.label.clone(),
                        tally.description.clone(),
                        tally.splits.to_string(),
                    ]
                })
                .collect();
            print_csv(
                &[
                    "shape",
                    "x",
                    "base",
                    "inert_count",
                    "required_splits_per_prime",
                    "violations",
                    "max_share",
                    "label",
                    "description",
                    "splits",
                ],
                &cells,
            );
        }
    }
    if report.violations > 0 {
        return Err(CliError::Identity(format!(
            "{} primes violate the pigeonhole splitting pattern",
            report.violations
        )));
    }
    Ok(())
}

pub fn classgroup(
    config: &RunConfig,
    disc: Option<i64>,
    range: Option<Vec<i64>>,
    ell: Option<u64>,
) -> Result<(), CliError> {
    let cache = config.open_cache()?;
    let bound = config.classgroup_disc_bound;
    let lookup = |d: i64| -> Result<(ClassGroupStructure, Option<u64>), CliError> {
        let structure = cache.structure(d, bound)?;
        let torsion = match ell {
            Some(l) => Some(cache.torsion(d, l, bound)?),
            None => None,
        };
        Ok((structure, torsion))
    };
    let row_json = |s: &ClassGroupStructure, torsion: Option<u64>| {
        json!({
            "disc": s.disc,
            "narrow": s.narrow,
            "invariant_factors": s.invariant_factors,
            "order": s.order(),
            "ell": ell,
            "torsion": torsion,
        })
    };
    let row_cells = |s: &ClassGroupStructure, torsion: Option<u64>| {
        vec![
            s.disc.to_string(),
            s.narrow.to_string(),
            joined(&s.invariant_factors),
            s.order().to_string(),
            ell.map(|l| l.to_string()).unwrap_or_default(),
            torsion.map(|t| t.to_string()).unwrap_or_default(),
        ]
    };
    let header = ["disc", "narrow", "invariant_factors", "order", "ell", "torsion"];
    match (disc, range) {
        (Some(d), None) => {
            let (structure, torsion) = lookup(d)?;
            match config.output_format {
                OutputFormat::Json => print_json(&row_json(&structure, torsion)),
                OutputFormat::Csv => print_csv(&header, &[row_cells(&structure, torsion)]),
            }
            Ok(())
        }
        (None, Some(endpoints)) => {
            let (a, b) = (endpoints[0], endpoints[1]);
            if a > b {
                return Err(CliError::Usage(format!("empty range: {a} > {b}")));
            }
            let discs: Vec<i64> = (a..=b).filter(|&d| is_fundamental(d)).collect();
            let rows: Vec<(ClassGroupStructure, Option<u64>)> =
                discs.par_iter().map(|&d| lookup(d)).collect::<Result<_, _>>()?;
            match config.output_format {
                OutputFormat::Json => print_json(&json!({
                    "range": [a, b],
                    "ell": ell,
                    "count": rows.len(),
                    "rows": rows
                        .iter()
                        .map(|(s, t)| row_json(s, *t))
                        .collect::<Vec<_>>(),
                })),
                OutputFormat::Csv => {
                    let cells: Vec<Vec<String>> =
                        rows.iter().map(|(s, t)| row_cells(s, *t)).collect();
                    print_csv(&header, &cells);
                }
            }
            Ok(())
        }
        _ => Err(CliError::Usage("exactly one of --disc and --range is required".to_owned())),
    }
}

pub fn field(
    config: &RunConfig,
    ext: Option<String>,
    discs: Option<Vec<i64>>,
    dim: Option<u32>,
) -> Result<(), CliError> {
    let field = match (ext, discs) {
        (Some(record), None) => AbelianExtension::parse(&record)?,
        (None, Some(ds)) => AbelianExtension::from_quadratic_discriminants(&ds)?,
        _ => {
            return Err(CliError::Usage(
                "exactly one of --ext and --discs is required".to_owned(),
            ))
        }
    };
    let dim = dim.unwrap_or(1);
    if dim < 1 || dim > field.rank() {
        return Err(CliError::Usage(format!(
            "subfield dimension must lie in 1..={}, got {dim}",
            field.rank()
        )));
    }
    let mut subfields = field.subfields_of_dimension(dim)?;
    subfields.sort_by_key(|k| (k.discriminant(), k.encode()));
    match config.output_format {
        OutputFormat::Json => print_json(&json!({
            "field": field.encode(),
            "p": field.p(),
            "r": field.rank(),
            "conductor": field.conductor(),
            "degree": field.degree(),
            "discriminant": field.discriminant().to_string(),
            "subfield_dimension": dim,
            "subfields": subfields
                .iter()
                .map(|k| json!({
                    "field": k.encode(),
                    "degree": k.degree(),
                    "conductor": k.conductor(),
                    "disc": k.discriminant().to_string(),
                    "subgroup_generators": k.subgroup_generators(),
                }))
                .collect::<Vec<_>>(),
        })),
        OutputFormat::Csv => {
            let cells: Vec<Vec<String>> = subfields
                .iter()
                .map(|k| {
                    vec![
                        k.degree().to_string(),
                        k.conductor().to_string(),
                        k.discriminant().to_string(),
                        joined(k.subgroup_generators()),
                    ]
                })
                .collect();
            print_csv(&["degree", "conductor", "disc", "subgroup_generators"], &cells);
            eprintln!(
                "field {}: conductor {}, degree {}, discriminant {}",
                field.encode(),
                field.conductor(),
                field.degree(),
                field.discriminant()
            );
        }
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
pub fn algebra_verify(
    config: &RunConfig,
    ell: u64,
    p: u64,
    r: u32,
    max_dim: usize,
    budget: u64,
    samples: u64,
    seed: u64,
) -> Result<(), CliError> {
    let report = verify_decomposition(ell, p, r, max_dim, budget, samples, seed)?;
    match config.output_format {
        OutputFormat::Json => {
            print_json(&serde_json::to_value(&report).expect("serializable report"));
        }
        OutputFormat::Csv => print_csv(
            &[
                "ell",
                "p",
                "r",
                "max_dim",
                "mode",
                "instances_tested",
                "faithful_tested",
                "seed",
                "failures",
            ],
            &[vec![
                report.ell.to_string(),
                report.p.to_string(),
                report.r.to_string(),
                report.max_dim.to_string(),
                report.mode.clone(),
                report.instances_tested.to_string(),
                report.faithful_tested.to_string(),
                report.seed.map(|s| s.to_string()).unwrap_or_default(),
                joined(&report.failures),
            ]],
        ),
    }
    if !report.failures.is_empty() {
        return Err(CliError::Identity(format!(
            "{} module instances violated the product identity",
            report.failures.len()
        )));
    }
    Ok(())
}

fn check(holds: bool, what: &str) -> Result<(), CliError> {
    if holds {
        Ok(())
    } else {
        Err(CliError::Identity(what.to_owned()))
    }
}

/// Every exact-identity suite at reduced scale: closed-form savings,
/// discriminant products, idempotent decompositions, the class-group
/// oracle, the Brun-Titchmarsh grid, pigeonhole splitting, both torsion
/// routes, and a cache round trip. Scan sizes honor the configured sieve
/// and discriminant caps.
pub fn selftest(config: &RunConfig) -> Result<(), CliError> {
    let cache = config.open_cache()?;
    let bound = config.classgroup_disc_bound;
    let x_max = config.sieve_limit.min(100_000);
    let exact = DeltaPolicy::exact();
    let rationals = BaseField::Rationals;
    let done = |name: &str| println!("selftest: {name} ... ok");

    for ell in [3u64, 5, 7, 9, 15, 21] {
        let rank2 = final_delta(ell, 2, 2, &rationals, &exact)?;
        check(
            rank2.delta == unit_fraction(64 * ell * ell + 4 * ell),
            &format!("rank-2 closed form failed at ell = {ell}"),
        )?;
        let rank3 = final_delta(ell, 2, 3, &rationals, &exact)?;
        check(
            rank3.delta == unit_fraction(48 * ell * ell + 12 * ell),
            &format!("rank-3 closed form failed at ell = {ell}"),
        )?;
    }
    let with_alternative = final_delta(3, 2, 3, &rationals, &exact)?;
    check(
        with_alternative.alternative.map(|(v, _)| v) == Some(unit_fraction(3)),
        "genus-theory alternative 1/3 missing for ell = 3",
    )?;
    check(
        grh_crossover_rank(3, 2, &rationals, &exact, false)?.r0 == 7,
        "crossover rank for (ell, p) = (3, 2) is not 7",
    )?;
    check(
        grh_crossover_rank(2, 3, &rationals, &exact, false)?.r0 == 4,
        "crossover rank for (ell, p) = (2, 3) is not 4",
    )?;
    done("closed-form savings and crossover ranks");

    let biquadratic = AbelianExtension::from_quadratic_discriminants(&[-23, 5])?;
    let small_biquadratic = AbelianExtension::from_quadratic_discriminants(&[-3, 5])?;
    let even_biquadratic = AbelianExtension::from_quadratic_discriminants(&[-4, -8])?;
    let triquadratic = AbelianExtension::from_quadratic_discriminants(&[-3, 5, -7])?;
    let cubic = AbelianExtension::new(3, 2, 63, &[8, 55])?;
    let fields =
        [&biquadratic, &small_biquadratic, &even_biquadratic, &triquadratic, &cubic];
    for ext in fields {
        let product: num_bigint::BigUint = ext
            .degree_p_subfields()?
            .iter()
            .map(|k| k.discriminant())
            .product();
        check(
            ext.discriminant() == product,
            &format!("discriminant is not the degree-p subfield product for {}", ext.encode()),
        )?;
    }
    let quartic_product: num_bigint::BigUint = triquadratic
        .subfields_of_dimension(2)?
        .iter()
        .map(|k| k.discriminant())
        .product();
    check(
        triquadratic.discriminant().pow(3) == quartic_product,
        "cubed discriminant does not match the quartic subfield product",
    )?;
    done("discriminant product identities");

    for (ell, p) in [(3u64, 2u64), (2, 3)] {
        let report = verify_decomposition(ell, p, 2, 2, 1 << 20, 0, 0)?;
        check(
            report.failures.is_empty() && report.mode == "exhaustive",
            &format!("module decomposition failed for ell = {ell}, p = {p}"),
        )?;
    }
    done("idempotent decompositions (exhaustive, dimension 2)");

    let oracle_floor = -(bound.min(500) as i64);
    for d in oracle_floor..0 {
        if !is_fundamental(d) {
            continue;
        }
        let order = cache.structure(d, bound)?.order();
        check(
            order == reduced_definite_forms(d).len() as u64,
            &format!("class number and reduced-form count disagree at D = {d}"),
        )?;
    }
    for (d, h) in [(-23i64, 3u64), (-15, 2), (-115, 2)] {
        if d.unsigned_abs() <= bound {
            check(
                cache.structure(d, bound)?.order() == h,
                &format!("expected class number {h} at D = {d}"),
            )?;
        }
    }
    done("class-group oracle agreement");

    let sieve = PrimeSieve::new(x_max);
    let grid = brun_titchmarsh_grid(&sieve, 20, x_max)?;
    check(
        grid.violations.is_empty(),
        "a Brun-Titchmarsh grid cell exceeds its bound",
    )?;
    done("Brun-Titchmarsh grid");

    for ext in [&small_biquadratic, &triquadratic, &cubic] {
        let report = pigeonhole_report(&sieve, ext, x_max)?;
        check(
            report.violations == 0,
            &format!("pigeonhole splitting violated for {}", ext.encode()),
        )?;
    }
    done("pigeonhole splitting patterns");

    let torsion =
        multiquadratic_torsion(&biquadratic, 3, bound, &cache, &config.delta_policy)?;
    check(
        torsion.total == num_bigint::BigUint::from(3u32),
        "decomposed 3-torsion of the (-23, 5) biquadratic field is not 3",
    )?;
    second_layer_consistency(&triquadratic, 3, bound, &cache, &config.delta_policy)?;
    done("torsion routes (direct and second-layer)");

    let first = cache.structure(-23, bound)?;
    let second = cache.structure(-23, bound)?;
    let recomputed = class_group(-23, bound)?;
    check(
        first == second && first == recomputed,
        "cache round trip does not reproduce the recomputed class group",
    )?;
    done("cache round trip");

    println!("selftest: all suites passed");
    Ok(())
}
