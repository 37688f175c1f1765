//! The six batch commands. Each returns a JSON payload, a flat table for
//! CSV output, and the precision it certifies.

use eigenkit_core::cech::{
    cech_check, completed_localization, kiehl_glue, AffinoidModel, CechReport, Chart, ChartElement, GlueRecord,
};
use eigenkit_core::laind::{bgg_check, compact_u_matrix, BggReport};
use eigenkit_core::padic::{NewtonPolygon, PadicContext, PadicScalar, ScalarRecord, TruncatedSeries, GUARD_DIGITS};
use eigenkit_core::spectral::{
    eigen_family_lift, fiber_eigendata, fredholm_series, joint_eigensystems, newton_slopes, riesz_projector,
    slope_factor, BanachModuleModel, CompactOperatorModel, FactorizationRecord, FamilyOperator, FiberEigendata,
    FredholmRecord, FredholmSeries, JointEigensystemRecord, SlopeSide,
};
use eigenkit_core::weight::{eval_character, universal_character_eval, Character, CharacterRecord, UniversalCharacterChart};
use eigenkit_core::ErrorClass;
use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::{ConfigError, RunConfig};

/// A failed run, classified for the exit status.
#[derive(Debug)]
pub struct CommandError {
    pub class: ErrorClass,
    pub message: String,
}

impl From<ConfigError> for CommandError {
    fn from(e: ConfigError) -> Self {
        CommandError { class: ErrorClass::Validation, message: e.0 }
    }
}

macro_rules! core_errors {
    ($($t:ty),*) => {$(
        impl From<$t> for CommandError {
            fn from(e: $t) -> Self {
                CommandError { class: e.class(), message: e.to_string() }
            }
        }
    )*};
}

core_errors!(
    eigenkit_core::padic::PadicError,
    eigenkit_core::weight::WeightError,
    eigenkit_core::laind::LaindError,
    eigenkit_core::spectral::SpectralError,
    eigenkit_core::cech::CechError
);

fn validation(msg: impl Into<String>) -> CommandError {
    CommandError { class: ErrorClass::Validation, message: msg.into() }
}

/// Result of one command before it is wrapped in an envelope.
pub struct Outcome {
    pub payload: serde_json::Value,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
    /// Precision (π-units) the payload claims.
    pub certified_pi: i64,
}

fn to_value<T: Serialize>(x: &T) -> serde_json::Value {
    serde_json::to_value(x).expect("payload types serialize")
}

fn strings(xs: &[&str]) -> Vec<String> {
    xs.iter().map(|s| s.to_string()).collect()
}

fn context(cfg: &RunConfig) -> Result<PadicContext, CommandError> {
    Ok(PadicContext::new(cfg.p, cfg.e, cfg.prec)?)
}

fn side(cfg: &RunConfig) -> SlopeSide {
    match cfg.side.as_str() {
        "strict" => SlopeSide::Strict,
        "lower_exclusive" => SlopeSide::LowerExclusive,
        _ => SlopeSide::LowerInclusive,
    }
}

fn ratio_text(r: Ratio<i64>) -> String {
    if *r.denom() == 1 {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

#[derive(Serialize)]
struct SeriesTerm {
    exponent: Vec<u32>,
    value: ScalarRecord,
}

fn series_record(s: &TruncatedSeries) -> Vec<SeriesTerm> {
    s.terms().map(|(k, c)| SeriesTerm { exponent: k.clone(), value: c.to_record() }).collect()
}

pub fn bgg(cfg: &RunConfig) -> Result<Outcome, CommandError> {
    let ctx = context(cfg)?;
    let k = cfg.weight.clone().unwrap_or_else(|| vec![0; cfg.g]);
    let kappa = Character::algebraic(ctx, &k)?;
    if !kappa.is_dominant() {
        return Err(validation(format!("weight {k:?} is not dominant")));
    }
    let report: BggReport = bgg_check(&kappa, cfg.deg)?;
    let row = vec![
        report.g.to_string(),
        format!("{:?}", report.weight),
        report.degree.to_string(),
        report.kernel_dim.to_string(),
        report.expected_dim.to_string(),
        report.kernel_dim_next.to_string(),
        report.composition_zero.to_string(),
        report.commutation_holds.to_string(),
        report.verdict.clone(),
    ];
    Ok(Outcome {
        payload: to_value(&report),
        header: strings(&[
            "g",
            "weight",
            "degree",
            "kernel_dim",
            "expected_dim",
            "kernel_dim_next",
            "composition_zero",
            "commutation_holds",
            "verdict",
        ]),
        rows: vec![row],
        certified_pi: report.precision_margin.min(ctx.cap()),
    })
}

/// The δ-product model on monomials of degree ≤ D, cut to N basis vectors.
fn u_model(cfg: &RunConfig, ctx: PadicContext) -> Result<Option<CompactOperatorModel>, CommandError> {
    let u = compact_u_matrix(ctx, cfg.g, None, cfg.deg)?;
    match cfg.n {
        Some(0) => Ok(None),
        Some(n) if n > u.size() => {
            Err(validation(format!("N = {n} exceeds the {} monomials of degree ≤ {}", u.size(), cfg.deg)))
        }
        Some(n) => Ok(Some(u.truncate(n)?)),
        None => Ok(Some(u)),
    }
}

#[derive(Serialize)]
struct SlopesPayload {
    size: usize,
    fredholm: FredholmRecord,
    polygon: NewtonPolygon,
    slopes: Vec<String>,
}

fn fredholm_of(u: &Option<CompactOperatorModel>, ctx: PadicContext) -> Result<(FredholmSeries, NewtonPolygon), CommandError> {
    match u {
        Some(u) => {
            let p = fredholm_series(u, None)?;
            let poly = newton_slopes(&p)?;
            Ok((p, poly))
        }
        None => {
            let p = FredholmSeries::from_polynomial(vec![PadicScalar::one(ctx)])?;
            Ok((p, NewtonPolygon::from_points(&[(0, Ratio::from(0))])))
        }
    }
}

pub fn slopes(cfg: &RunConfig) -> Result<Outcome, CommandError> {
    let ctx = context(cfg)?;
    let u = u_model(cfg, ctx)?;
    let (p, poly) = fredholm_of(&u, ctx)?;
    let multiset: Vec<String> = poly.slope_multiset().into_iter().map(ratio_text).collect();
    let rows = multiset.iter().enumerate().map(|(i, s)| vec![i.to_string(), s.clone()]).collect();
    let payload = SlopesPayload {
        size: u.as_ref().map_or(0, |u| u.size()),
        fredholm: p.to_record(),
        polygon: poly,
        slopes: multiset,
    };
    Ok(Outcome { payload: to_value(&payload), header: strings(&["index", "slope"]), rows, certified_pi: ctx.cap() })
}

#[derive(Serialize)]
struct ProjectorSummary {
    rank: usize,
    idempotency_defect_pi: i64,
    commutator_defect_pi: i64,
    charpoly_defect_pi: i64,
}

#[derive(Serialize)]
struct FactorPayload {
    fredholm: FredholmRecord,
    factorization: FactorizationRecord,
    deg_q: usize,
    projector: ProjectorSummary,
    eigensystems: Vec<JointEigensystemRecord>,
}

pub fn factor(cfg: &RunConfig) -> Result<Outcome, CommandError> {
    let ctx = context(cfg)?;
    let h = cfg.h_ratio()?.ok_or_else(|| validation("factor needs a slope cut h"))?;
    let u = u_model(cfg, ctx)?.ok_or_else(|| validation("factor needs N ≥ 1"))?;
    let p = fredholm_series(&u, None)?;
    let fact = slope_factor(&p, h, side(cfg))?;
    let proj = riesz_projector(&u, &fact)?;
    let systems = joint_eigensystems(&[u.matrix()], &proj.e)?;
    let rows = systems
        .iter()
        .enumerate()
        .map(|(i, s)| {
            vec![
                i.to_string(),
                s.values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "),
                s.multiplicity.to_string(),
            ]
        })
        .collect();
    let payload = FactorPayload {
        fredholm: p.to_record(),
        factorization: fact.to_record(),
        deg_q: fact.d(),
        projector: ProjectorSummary {
            rank: proj.rank,
            idempotency_defect_pi: proj.idempotency_defect_pi,
            commutator_defect_pi: proj.commutator_defect_pi,
            charpoly_defect_pi: proj.charpoly_defect_pi,
        },
        eigensystems: systems.iter().map(|s| s.to_record()).collect(),
    };
    Ok(Outcome {
        payload: to_value(&payload),
        header: strings(&["character", "values", "multiplicity"]),
        rows,
        certified_pi: fact.certified_pi.min(ctx.cap()),
    })
}

#[derive(Serialize)]
struct FamilyPayload {
    matrix: Vec<Vec<String>>,
    fiber: FiberEigendata,
    lambda0: ScalarRecord,
    normalization: usize,
    lambda: Vec<SeriesTerm>,
    vector: Vec<Vec<SeriesTerm>>,
    residual_pi: i64,
}

pub fn family(cfg: &RunConfig) -> Result<Outcome, CommandError> {
    let ctx = context(cfg)?;
    let p = cfg.p as i64;
    // U(S) = [[1 + S, 1], [0, p]]
    let entries = vec![
        vec![vec![(vec![0], 1), (vec![1], 1)], vec![(vec![0], 1)]],
        vec![vec![], vec![(vec![0], p)]],
    ];
    let fam = FamilyOperator::from_terms(ctx, &["S"], cfg.deg_a, &entries)?;
    let h = cfg.h_ratio()?.unwrap_or_else(|| Ratio::from(cfg.prec as i64));
    let fiber = fiber_eigendata(&fam, &[PadicScalar::zero(ctx)], h, side(cfg))?;
    let lambda0 = match cfg.lambda0 {
        Some(l) => PadicScalar::from_i64(ctx, l),
        None => fiber
            .points
            .iter()
            .filter(|pt| pt.multiplicity == 1)
            .filter_map(|pt| pt.eigenvalue.as_ref())
            .last()
            .map(|r| PadicScalar::from_record(ctx, r))
            .transpose()?
            .ok_or_else(|| validation("no simple eigenvalue in K below the slope cut"))?,
    };
    let lift = eigen_family_lift(&fam, &lambda0, cfg.normalization)?;
    let n = lift.vector.len();
    let rows = (0..=cfg.deg_a)
        .map(|k| {
            let mut row = vec![k.to_string(), lift.lambda.coeff(&[k]).to_string()];
            row.extend(lift.vector.iter().map(|v| v.coeff(&[k]).to_string()));
            row
        })
        .collect();
    let mut header = strings(&["degree", "lambda"]);
    header.extend((0..n).map(|i| format!("v{i}")));
    let payload = FamilyPayload {
        matrix: vec![vec!["1+S".into(), "1".into()], vec!["0".into(), p.to_string()]],
        fiber,
        lambda0: lambda0.to_record(),
        normalization: lift.normalization,
        lambda: series_record(&lift.lambda),
        vector: lift.vector.iter().map(series_record).collect(),
        residual_pi: lift.residual_pi,
    };
    Ok(Outcome { payload: to_value(&payload), header, rows, certified_pi: lift.residual_pi.min(ctx.cap()) })
}

#[derive(Serialize)]
struct CechPayload {
    rank: usize,
    base_degree: u32,
    report: CechReport,
    glue: GlueRecord,
}

pub fn cech(cfg: &RunConfig) -> Result<Outcome, CommandError> {
    let ctx = context(cfg)?;
    let base = AffinoidModel::new(ctx, cfg.deg_a)?;
    let m = BanachModuleModel::orthonormal(base.base_ring(), (0..cfg.rank).map(|i| format!("e{i}")).collect());
    let report = cech_check(&m, &base)?;
    // glue the charts along 1 + p(f + f⁻¹) on every diagonal entry
    let plus = completed_localization(&m, &base, Chart::Plus)?;
    let minus = completed_localization(&m, &base, Chart::Minus)?;
    let p = cfg.p as i64;
    let transition: Vec<Vec<ChartElement>> = (0..cfg.rank)
        .map(|i| {
            (0..cfg.rank)
                .map(|j| {
                    let terms: &[(i64, i64)] = if i == j { &[(-1, p), (0, 1), (1, p)] } else { &[] };
                    ChartElement::from_i64_terms(ctx, Chart::Both, terms)
                })
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<_, _>>()?;
    let glued = kiehl_glue(&plus, &minus, &transition)?;
    let certified = if report.middle_exact {
        ctx.cap() - GUARD_DIGITS as i64 * ctx.e() as i64
    } else {
        report.middle_defect_valuation_pi.unwrap_or(ctx.cap()).min(ctx.cap())
    };
    let row = vec![
        report.injective.to_string(),
        report.middle_exact.to_string(),
        format!("{:e}", report.middle_defect_norm),
        report.rounds.to_string(),
        format!("{:e}", report.epsilon),
        report.recovered_rank.to_string(),
        glued.module.rank().to_string(),
    ];
    let payload = CechPayload { rank: cfg.rank, base_degree: cfg.deg_a, report, glue: glued.to_record(ctx) };
    Ok(Outcome {
        payload: to_value(&payload),
        header: strings(&[
            "injective",
            "middle_exact",
            "middle_defect_norm",
            "rounds",
            "epsilon",
            "recovered_rank",
            "glued_rank",
        ]),
        rows: vec![row],
        certified_pi: certified,
    })
}

#[derive(Serialize)]
struct Evaluation {
    point: Vec<i64>,
    value: ScalarRecord,
    monomial: ScalarRecord,
    agrees: bool,
}

#[derive(Serialize)]
struct UniversalRow {
    x_degree: u32,
    min_valuation: Option<String>,
    bound: String,
    holds: bool,
}

#[derive(Serialize)]
struct WeightsPayload {
    character: CharacterRecord,
    evaluations: Vec<Evaluation>,
    universal: Option<Vec<UniversalRow>>,
    universal_note: Option<String>,
}

fn universal_table(cfg: &RunConfig, ctx: PadicContext) -> Result<Result<Vec<UniversalRow>, String>, CommandError> {
    let w = cfg.w_ratio()?;
    let chart = match UniversalCharacterChart::new(ctx, w, cfg.g, cfg.universal_degree) {
        Ok(c) => c,
        Err(e) => return Ok(Err(e.to_string())),
    };
    let series = universal_character_eval(&chart);
    let g = cfg.g;
    let e = ctx.e() as i64;
    let q = ctx.p() as i64 - 1;
    let mut rows = Vec::new();
    for k in 0..=cfg.universal_degree {
        let min = series
            .terms()
            .filter(|(m, _)| m[g..].iter().sum::<u32>() == k)
            .filter_map(|(_, c)| c.valuation_pi())
            .min();
        let bound = if k == 0 { Ratio::from(0) } else { Ratio::new(k as i64 + 1, q) };
        let holds = min.map_or(true, |v| Ratio::new(v, e) >= bound);
        rows.push(UniversalRow { x_degree: k, min_valuation: min.map(|v| ratio_text(Ratio::new(v, e))), bound: ratio_text(bound), holds });
    }
    Ok(Ok(rows))
}

pub fn weights(cfg: &RunConfig) -> Result<Outcome, CommandError> {
    let ctx = context(cfg)?;
    let k = cfg.weight.clone().unwrap_or_else(|| vec![0; cfg.g]);
    let kappa = Character::algebraic(ctx, &k)?;
    let points: Vec<Vec<i64>> = match &cfg.torus {
        Some(pts) => pts.clone(),
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let p = cfg.p as i64;
            (0..cfg.samples)
                .map(|_| {
                    (0..cfg.g)
                        .map(|_| loop {
                            let t = rng.gen_range(1..1_000_000i64);
                            if t % p != 0 {
                                break t;
                            }
                        })
                        .collect()
                })
                .collect()
        }
    };
    let mut evaluations = Vec::with_capacity(points.len());
    for pt in &points {
        if pt.len() != cfg.g {
            return Err(validation(format!("torus point {pt:?} has the wrong length")));
        }
        let t: Vec<PadicScalar> = pt.iter().map(|&x| PadicScalar::from_i64(ctx, x)).collect();
        let value = eval_character(&kappa, &t)?;
        let mut mono = PadicScalar::one(ctx);
        for (ti, &ki) in t.iter().zip(&k) {
            mono = &mono * &ti.powi(ki)?;
        }
        evaluations.push(Evaluation { point: pt.clone(), agrees: value == mono, value: value.to_record(), monomial: mono.to_record() });
    }
    let (universal, universal_note) = match universal_table(cfg, ctx)? {
        Ok(rows) => (Some(rows), None),
        Err(note) => (None, Some(note)),
    };
    let rows = evaluations
        .iter()
        .map(|ev| {
            let pt = ev.point.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";");
            let v = PadicScalar::from_record(ctx, &ev.value).map(|x| x.to_string()).unwrap_or_default();
            vec![pt, v, ev.agrees.to_string()]
        })
        .collect();
    let payload = WeightsPayload { character: kappa.to_record(), evaluations, universal, universal_note };
    Ok(Outcome { payload: to_value(&payload), header: strings(&["point", "value", "agrees"]), rows, certified_pi: ctx.cap() })
}
