//! Which limit theorems apply to a (model, test function) pair.
//!
//! Verdicts come from declared metadata and the spot checks in
//! [`super::checks`]. Conditions that cannot be checked mechanically are
//! reported as [`Verdict::Unknown`]. Every model built by this crate has
//! finite-activity jumps, bounded-on-compacts coefficients and a volatility
//! of the form drift + `σ̃ dW` + `ṽ dV` + finite-activity jumps, so the
//! structural hypotheses on `X` (`N_0`, `N_1`, `N_2(s)` for all `s`) hold
//! automatically; the remaining conditions concern `f` and the declared
//! flags.

use std::fmt;

use super::checks::{check_derivatives, check_parity, check_vanishes_at_origin};
use super::function::{Parity, TestFunction};
use super::spec::ModelSpec;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Applies,
    Fails(String),
    Unknown(String),
}

impl Verdict {
    pub fn applies(&self) -> bool {
        matches!(self, Verdict::Applies)
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Applies => write!(f, "applies"),
            Verdict::Fails(r) => write!(f, "fails({r})"),
            Verdict::Unknown(r) => write!(f, "unknown({r})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApplicabilityReport {
    /// LLN for `V^n`, jump-sum limit.
    pub t1: Verdict,
    /// LLN for `V^n`, Itô-type limit.
    pub t2: Verdict,
    /// LLN for `V'^n`.
    pub t3: Verdict,
    /// CLT for `V^n`.
    pub t4: Verdict,
    /// CLT for `V'^n`, even `f`.
    pub t5: Verdict,
    /// CLT for `V'^n`, general `f`.
    pub t6: Verdict,
}

impl ApplicabilityReport {
    pub fn entries(&self) -> [(&'static str, &Verdict); 6] {
        [
            ("t1", &self.t1),
            ("t2", &self.t2),
            ("t3", &self.t3),
            ("t4", &self.t4),
            ("t5", &self.t5),
            ("t6", &self.t6),
        ]
    }

    pub fn get(&self, theorem: &str) -> Option<&Verdict> {
        self.entries()
            .into_iter()
            .find(|(name, _)| *name == theorem)
            .map(|(_, v)| v)
    }
}

impl fmt::Display for ApplicabilityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (name, verdict) in self.entries() {
            writeln!(f, "{name}: {verdict}")?;
        }
        Ok(())
    }
}

macro_rules! require {
    ($cond:expr, $verdict:expr) => {
        if !$cond {
            return $verdict;
        }
    };
}

fn fails(reason: impl Into<String>) -> Verdict {
    Verdict::Fails(reason.into())
}

fn unknown(reason: impl Into<String>) -> Verdict {
    Verdict::Unknown(reason.into())
}

struct Facts {
    continuous: bool,
    parity: Result<(), String>,
    derivatives: Result<(), String>,
    vanishes: Result<(), String>,
}

pub fn check_applicability(model: &ModelSpec, f: &TestFunction) -> ApplicabilityReport {
    if model.d() != f.d() {
        let v = fails(format!(
            "dimension mismatch: model d={}, function d={}",
            model.d(),
            f.d()
        ));
        return ApplicabilityReport {
            t1: v.clone(),
            t2: v.clone(),
            t3: v.clone(),
            t4: v.clone(),
            t5: v.clone(),
            t6: v,
        };
    }
    let facts = Facts {
        continuous: model.flags().continuous,
        parity: check_parity(f),
        derivatives: check_derivatives(f),
        vanishes: check_vanishes_at_origin(f),
    };
    ApplicabilityReport {
        t1: t1(f),
        t2: t2(f, &facts),
        t3: t3(f, &facts),
        t4: t4(f, &facts),
        t5: t5(f, &facts),
        t6: t6(model, f, &facts),
    }
}

fn t1(f: &TestFunction) -> Verdict {
    let m = f.meta();
    require!(m.satisfies_k, fails("f does not satisfy K"));
    require!(
        m.origin_order > 2.0,
        fails(format!(
            "needs ‖f‖ ≤ Γ‖x‖^p near 0 with p > 2, declared order {}",
            m.origin_order
        ))
    );
    Verdict::Applies
}

fn t2(f: &TestFunction, facts: &Facts) -> Verdict {
    let m = f.meta();
    require!(m.satisfies_k, fails("f does not satisfy K"));
    if let Err(e) = &facts.vanishes {
        return fails(format!("f(t,z,0) ≠ 0: {e}"));
    }
    let d = f.derivatives();
    require!(d.grad_x && d.hess_x, unknown("∇_x f or ∇²_x f not supplied"));
    if let Err(e) = &facts.derivatives {
        return unknown(format!("supplied derivatives fail the finite-difference check: {e}"));
    }
    Verdict::Applies
}

fn t3(f: &TestFunction, facts: &Facts) -> Verdict {
    let m = f.meta();
    require!(m.satisfies_k, fails("f does not satisfy K"));
    require!(m.equicontinuous_x, fails("f is not locally equicontinuous in x"));
    require!(
        facts.continuous || m.growth < 2.0,
        fails(format!("p ≥ 2 with jumps (p = {})", m.growth))
    );
    Verdict::Applies
}

fn t4(f: &TestFunction, facts: &Facts) -> Verdict {
    let m = f.meta();
    require!(m.satisfies_m1, fails("f does not satisfy M1"));
    if let Err(e) = &facts.vanishes {
        return fails(format!("declared M1 but f(t,z,0) ≠ 0: {e}"));
    }
    require!(
        m.time_holder.is_none_or(|a| a > 0.5),
        fails("time-Hölder exponent must exceed 1/2")
    );
    let d = f.derivatives();
    require!(
        d.grad_x && d.grad_z,
        unknown("∇_x f and ∇_z f must be supplied to evaluate the limit")
    );
    if let Err(e) = &facts.derivatives {
        return unknown(format!("supplied derivatives fail the finite-difference check: {e}"));
    }
    Verdict::Applies
}

/// Shared smoothness alternatives of the two `V'^n` CLTs.
fn v_prime_clt_conditions(f: &TestFunction, facts: &Facts) -> Verdict {
    let m = f.meta();
    if facts.continuous {
        require!(m.satisfies_m2, fails("X is continuous but f does not satisfy M2"));
    } else {
        require!(m.satisfies_m2prime, fails("X has jumps and f does not satisfy M2'"));
    }
    if let Err(e) = &facts.parity {
        return fails(format!("declared parity contradicted by spot check: {e}"));
    }
    Verdict::Applies
}

fn t5(f: &TestFunction, facts: &Facts) -> Verdict {
    require!(
        f.meta().parity.iter().all(|p| *p == Parity::Even),
        fails("f is not declared even in x in every component")
    );
    v_prime_clt_conditions(f, facts)
}

fn t6(model: &ModelSpec, f: &TestFunction, facts: &Facts) -> Verdict {
    let flags = model.flags();
    require!(flags.bprime_zero, fails("b′ not declared zero"));
    require!(flags.sigmatilde_zero, fails("σ̃ not declared zero"));
    v_prime_clt_conditions(f, facts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::catalog::{power_abs, quad, quartic};
    use crate::model::function::{FunctionMeta, Kernel};
    use crate::model::jumps::{JumpLaw, JumpSpec};
    use crate::model::spec::HypothesisFlags;
    use proptest::prelude::*;
    use std::sync::Arc;

    fn jump_model() -> ModelSpec {
        ModelSpec::builder(1, 1)
            .sigma(vec![1.0])
            .jumps(JumpSpec::poisson(1.0, JumpLaw::gaussian(vec![1.0]).unwrap()))
            .build()
            .unwrap()
    }

    #[test]
    fn brownian_quad() {
        let r = check_applicability(&ModelSpec::brownian(1, 1.0), &quad(1).unwrap());
        assert_eq!(r.t3, Verdict::Applies);
        assert_eq!(r.t5, Verdict::Applies);
        assert_eq!(r.t6, Verdict::Fails("b′ not declared zero".into()));
        assert!(matches!(r.t4, Verdict::Fails(_)));
        assert!(matches!(r.t1, Verdict::Fails(_)));
        assert_eq!(r.t2, Verdict::Applies);
    }

    #[test]
    fn jumps_with_fourth_power_growth() {
        let r = check_applicability(&jump_model(), &power_abs(1, 4.0).unwrap());
        assert!(matches!(&r.t3, Verdict::Fails(reason) if reason.contains("p ≥ 2")));
        let r = check_applicability(&jump_model(), &quartic(1).unwrap());
        assert_eq!(r.t4, Verdict::Applies);
        assert_eq!(r.t1, Verdict::Applies);
    }

    #[test]
    fn deterministic() {
        let a = check_applicability(&jump_model(), &quad(1).unwrap());
        let b = check_applicability(&jump_model(), &quad(1).unwrap());
        assert_eq!(a, b);
    }

    struct Square;
    impl Kernel for Square {
        fn eval(&self, _t: f64, _z: &[f64], x: &[f64], out: &mut [f64]) {
            out[0] = x[0] * x[0];
        }
    }

    fn parity_strategy() -> impl Strategy<Value = Parity> {
        prop_oneof![Just(Parity::Even), Just(Parity::Odd), Just(Parity::Neither)]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn report_invariants(
            parity in parity_strategy(),
            growth in 0.0f64..6.0,
            m1: bool, m2: bool, m2p: bool,
            with_jumps: bool, bprime_zero: bool, sigmatilde_zero: bool,
        ) {
            let meta = FunctionMeta {
                parity: vec![parity],
                growth,
                origin_order: 2.0,
                time_holder: None,
                depends_on_z: false,
                equicontinuous_x: true,
                satisfies_k: true,
                satisfies_m1: m1,
                satisfies_m2: m2,
                satisfies_m2prime: m2p,
            };
            let f = TestFunction::new("custom", 1, 1, meta, Arc::new(Square)).unwrap();
            let mut b = ModelSpec::builder(1, 1).sigma(vec![1.0]);
            if with_jumps {
                b = b.jumps(JumpSpec::poisson(1.0, JumpLaw::gaussian(vec![1.0]).unwrap()));
            }
            let model = b
                .flags(HypothesisFlags { continuous: !with_jumps, bprime_zero, sigmatilde_zero })
                .build()
                .unwrap();
            let r = check_applicability(&model, &f);
            if r.t5.applies() { prop_assert_eq!(parity, Parity::Even); }
            if r.t6.applies() { prop_assert!(bprime_zero && sigmatilde_zero); }
            if r.t3.applies() && with_jumps { prop_assert!(growth < 2.0); }
            if r.t4.applies() { prop_assert!(m1); }
        }
    }
}
