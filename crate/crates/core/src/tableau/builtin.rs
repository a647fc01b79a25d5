//! Built-in methods. Coefficients are the published 15-digit decimals.

use nalgebra::{DMatrix, DVector};

use super::{ButcherTableau, Method, MethodKind, ShuOsherTableau};

#[derive(Debug, Clone)]
pub struct BuiltinMethod {
    pub name: &'static str,
    pub design_order: usize,
    /// Whether the method is claimed to satisfy the SSP sign conditions.
    pub ssp: bool,
    pub method: Method,
}

/// All built-in methods, SSP methods first.
pub fn builtin_methods() -> Vec<BuiltinMethod> {
    vec![
        builtin("implicit-taylor-2", 2, true, Method::ShuOsher(implicit_taylor_2())),
        builtin("ssp-imdrk-3", 3, true, Method::ShuOsher(ssp_imdrk_3())),
        builtin("ssp-imdrk-4", 4, true, Method::ShuOsher(ssp_imdrk_4())),
        builtin("ssp-imex-mdrk-2", 2, true, Method::ShuOsher(ssp_imex_mdrk_2())),
        builtin("ssp-imex-mdrk-3", 3, true, Method::ShuOsher(ssp_imex_mdrk_3())),
        builtin("dirk-2", 2, false, Method::Butcher(dirk_2())),
        builtin("dirk-3", 3, false, Method::Butcher(dirk_3())),
    ]
}

pub fn lookup_builtin(name: &str) -> Option<BuiltinMethod> {
    builtin_methods().into_iter().find(|m| m.name == name)
}

fn builtin(name: &'static str, design_order: usize, ssp: bool, method: Method) -> BuiltinMethod {
    debug_assert_eq!(method.name(), name);
    BuiltinMethod {
        name,
        design_order,
        ssp,
        method,
    }
}

/// Builds an `s x s` matrix from leading row entries; missing entries are zero.
fn lower_rows(s: usize, rows: &[&[f64]]) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(s, s);
    for (i, row) in rows.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            m[(i, j)] = v;
        }
    }
    m
}

fn implicit_taylor_2() -> ShuOsherTableau {
    ShuOsherTableau::implicit(
        "implicit-taylor-2",
        DMatrix::zeros(1, 1),
        DVector::from_vec(vec![1.0]),
        DVector::from_vec(vec![-0.5]),
    )
    .expect("valid tableau")
}

fn ssp_imdrk_3() -> ShuOsherTableau {
    ShuOsherTableau::new(
        "ssp-imdrk-3",
        MethodKind::ImplicitTwoDerivative,
        lower_rows(2, &[&[], &[1.0]]),
        DMatrix::zeros(2, 2),
        DVector::from_vec(vec![0.0, 1.0]),
        DVector::from_vec(vec![-1.0 / 6.0, -1.0 / 3.0]),
        1.0,
        DVector::from_vec(vec![1.0, 0.0]),
    )
    .expect("valid tableau")
}

fn ssp_imdrk_4() -> ShuOsherTableau {
    ShuOsherTableau::new(
        "ssp-imdrk-4",
        MethodKind::ImplicitTwoDerivative,
        lower_rows(
            5,
            &[
                &[],
                &[1.0],
                &[0.084036809261019, 0.915963190738981],
                &[0.001511648458457, 0.0, 0.090254853867587],
                &[0.0, 0.0, 0.0, 1.0],
            ],
        ),
        DMatrix::zeros(5, 5),
        DVector::from_vec(vec![
            0.660949255604937,
            0.242201390400848,
            1.137542996287740,
            0.191388711018110,
            0.625266691721946,
        ]),
        DVector::from_vec(vec![
            -0.177750705279127,
            -0.354733903778084,
            -0.403963513682271,
            -0.161628266349058,
            -0.218859021269943,
        ]),
        1.0,
        DVector::from_vec(vec![1.0, 0.0, 0.0, 0.908233497673956, 0.0]),
    )
    .expect("valid tableau")
}

fn ssp_imex_mdrk_2() -> ShuOsherTableau {
    ShuOsherTableau::new(
        "ssp-imex-mdrk-2",
        MethodKind::ImexMultiDerivative,
        lower_rows(3, &[&[], &[], &[0.5]]),
        lower_rows(3, &[&[], &[1.0], &[0.0, 0.5]]),
        DVector::from_vec(vec![0.5, 0.0, 0.5]),
        DVector::from_vec(vec![0.0, -0.5, 0.0]),
        1.0,
        DVector::from_vec(vec![1.0, 0.0, 0.0]),
    )
    .expect("valid tableau")
}

fn ssp_imex_mdrk_3() -> ShuOsherTableau {
    ShuOsherTableau::new(
        "ssp-imex-mdrk-3",
        MethodKind::ImexMultiDerivative,
        lower_rows(
            6,
            &[
                &[],
                &[0.253395246357353],
                &[0.0, 0.235733481708505],
                &[0.0, 0.123961833526104],
                &[0.409037644509411, 0.136123556305509],
                &[0.203353399602184, 0.0, 0.0, 0.0, 0.331204417210324],
            ],
        ),
        lower_rows(
            6,
            &[
                &[],
                &[0.058453072749259],
                &[0.764266518291495],
                &[0.0, 0.0, 0.292520982667463],
                &[0.173788618990251, 0.0, 0.0, 0.281050180194829],
                &[0.016811671845949, 0.0, 0.0, 0.448630511341543, 0.0],
            ],
        ),
        DVector::from_vec(vec![
            0.0,
            2.0,
            0.388820513661584,
            0.083529464436389,
            1.793313488277995,
            0.0,
        ]),
        -DVector::from_vec(vec![
            0.871358934880525,
            0.856842702601821,
            0.0,
            0.0,
            2.0,
            0.205134529930013,
        ]),
        0.904402174130635,
        DVector::from_vec(vec![
            1.0,
            0.688151680893388,
            0.0,
            0.583517183806433,
            0.0,
            0.0,
        ]),
    )
    .expect("valid tableau")
}

fn dirk_2() -> ButcherTableau {
    let a = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.5, 0.5]);
    ButcherTableau::new(
        "dirk-2",
        MethodKind::ImplicitTwoDerivative,
        DMatrix::zeros(2, 2),
        a,
        DMatrix::zeros(2, 2),
    )
    .expect("valid tableau")
}

fn dirk_3() -> ButcherTableau {
    #[rustfmt::skip]
    let a = DMatrix::from_row_slice(4, 4, &[
        0.0, 0.0, 0.0, 0.0,
        0.75, 0.75, 0.0, 0.0,
        447.0 / 675.0, -357.0 / 675.0, 855.0 / 675.0, 0.0,
        13.0 / 42.0, 84.0 / 42.0, -125.0 / 42.0, 70.0 / 42.0,
    ]);
    ButcherTableau::new(
        "dirk-3",
        MethodKind::ImplicitTwoDerivative,
        DMatrix::zeros(4, 4),
        a,
        DMatrix::zeros(4, 4),
    )
    .expect("valid tableau")
}

/// Butcher matrices as printed alongside the Shu-Osher coefficients.
#[derive(Debug, Clone)]
pub struct PublishedButcher {
    pub ahat: DMatrix<f64>,
    pub a: DMatrix<f64>,
    pub adot: DMatrix<f64>,
    /// `false` when the printed listing had to be re-indexed (transposed
    /// subscripts) before it could be compared.
    pub verbatim: bool,
}

impl PublishedButcher {
    /// Largest elementwise difference against a converted tableau.
    pub fn max_deviation(&self, bt: &ButcherTableau) -> f64 {
        (bt.ahat() - &self.ahat)
            .amax()
            .max((bt.a() - &self.a).amax())
            .max((bt.adot() - &self.adot).amax())
    }
}

/// Published Butcher matrices for the SSP methods that list them.
pub fn published_butcher(name: &str) -> Option<PublishedButcher> {
    match name {
        "ssp-imdrk-3" => Some(PublishedButcher {
            ahat: DMatrix::zeros(2, 2),
            a: lower_rows(2, &[&[0.0], &[0.0, 1.0]]),
            adot: lower_rows(2, &[&[-1.0 / 6.0], &[-1.0 / 6.0, -1.0 / 3.0]]),
            verbatim: true,
        }),
        "ssp-imdrk-4" => Some(imdrk4_listing()),
        "ssp-imex-mdrk-2" => Some(PublishedButcher {
            ahat: lower_rows(3, &[&[], &[1.0], &[0.5, 0.5]]),
            a: lower_rows(3, &[&[0.5], &[0.5, 0.0], &[0.5, 0.0, 0.5]]),
            adot: lower_rows(3, &[&[0.0], &[0.0, -0.5], &[0.0, -0.25, 0.0]]),
            verbatim: true,
        }),
        "ssp-imex-mdrk-3" => Some(imex3_listing()),
        _ => None,
    }
}

fn imex3_listing() -> PublishedButcher {
    let ahat = lower_rows(
        6,
        &[
            &[],
            &[0.064631725156397],
            &[0.860287477078593],
            &[0.259664005325885, 0.0, 0.323441264334256],
            &[0.273935075266107, 0.0, 0.090903225623586, 0.310757966128278],
            &[0.225810414773773, 0.0, 0.175213169672431, 0.598976415553796, 0.0],
        ],
    );
    let a = lower_rows(
        6,
        &[
            &[0.0],
            &[0.0, 2.0],
            &[0.0, 0.471466963417009, 0.388820513661584],
            &[0.0, 0.385837646486197, 0.113738158737554, 0.083529464436389],
            &[0.0, 0.380686852681912, 0.031966130008218, 0.023475971031425, 1.793313488277995],
            &[0.0, 0.299183707820065, 0.061613731773316, 0.045249211646092, 0.593953348760527, 0.0],
        ],
    );
    let adot = -lower_rows(
        6,
        &[
            &[0.871358934880525],
            &[0.271731819181020, 0.856842702601821],
            &[0.730006747169852, 0.201986513560852],
            &[0.247226665569066, 0.165301085890380],
            &[0.614323072678900, 0.163094375848475, 0.0, 0.0, 2.0],
            &[0.506222742811925, 0.128176688391489, 0.0, 0.0, 0.662408834420649, 0.205134529930013],
        ],
    );
    PublishedButcher {
        ahat,
        a,
        adot,
        verbatim: true,
    }
}

/// The fourth-order listing names upper-triangular entries (`a_12 = a_13 =
/// a_11`, ...); it is read here with the subscripts transposed, which is the
/// only reading compatible with a lower-triangular `R^-1 D`.
fn imdrk4_listing() -> PublishedButcher {
    let d = [
        0.660949255604937,
        0.242201390400848,
        1.137542996287740,
        0.191388711018110,
        0.625266691721946,
    ];
    let dd = [
        -0.177750705279127,
        -0.354733903778084,
        -0.403963513682271,
        -0.161628266349058,
        -0.218859021269943,
    ];
    let a = lower_rows(
        5,
        &[
            &[d[0]],
            &[d[0], d[1]],
            &[d[0], 0.221847558352979, d[2]],
            &[0.060653001401867, 0.020022818960029, 0.102668776898047, d[3]],
            &[0.060653001401867, 0.020022818960029, 0.102668776898047, d[3], d[4]],
        ],
    );
    let adot = lower_rows(
        5,
        &[
            &[dd[0]],
            &[dd[0], dd[1]],
            &[dd[0], -0.324923198367868, dd[2]],
            &[-0.016311560509453, -0.029325895786881, -0.036459667895230, dd[3]],
            &[-0.016311560509453, -0.029325895786881, -0.036459667895230, dd[3], dd[4]],
        ],
    );
    PublishedButcher {
        ahat: DMatrix::zeros(5, 5),
        a,
        adot,
        verbatim: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_contents() {
        let names: Vec<_> = builtin_methods().iter().map(|m| m.name).collect();
        assert_eq!(
            names,
            [
                "implicit-taylor-2",
                "ssp-imdrk-3",
                "ssp-imdrk-4",
                "ssp-imex-mdrk-2",
                "ssp-imex-mdrk-3",
                "dirk-2",
                "dirk-3"
            ]
        );
        assert!(lookup_builtin("nope").is_none());
    }

    #[test]
    fn transcribed_values() {
        let imex3 = lookup_builtin("ssp-imex-mdrk-3").unwrap();
        let t = imex3.method.shu_osher().unwrap();
        assert_eq!(t.r(), 0.904402174130635);
        assert_eq!(t.d()[1], 2.0);
        assert_eq!(t.ddot()[0], -0.871358934880525);
        assert_eq!(t.stages(), 6);

        let imdrk4 = lookup_builtin("ssp-imdrk-4").unwrap();
        let t = imdrk4.method.shu_osher().unwrap();
        assert_eq!(t.d()[0], 0.660949255604937);
        assert_eq!(t.stages(), 5);

        let imex2 = lookup_builtin("ssp-imex-mdrk-2").unwrap();
        assert_eq!(imex2.method.ssp_coefficient(), Some(1.0));
        assert_eq!(imex2.method.stages(), 3);
    }

    #[test]
    fn ssp_entries_pass_sign_conditions() {
        for m in builtin_methods().into_iter().filter(|m| m.ssp) {
            let report = m.method.shu_osher().unwrap().validate_ssp_signs();
            assert!(report.passes, "{}: {:?}", m.name, report.violations);
        }
    }

    #[test]
    fn imex_methods_have_implicit_term_in_every_stage() {
        for name in ["ssp-imex-mdrk-2", "ssp-imex-mdrk-3"] {
            let m = lookup_builtin(name).unwrap();
            assert!(m.method.shu_osher().unwrap().every_stage_implicit(), "{name}");
        }
    }
}
