//! Method tags and best-of selection over several synthesizers.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use crate::ancilla::{ancilla_synth, ParityTable};
use crate::baselines::{gaussian_synth, kutin_synth};
use crate::circuit::SynthesisResult;
use crate::dacsynth::{dacsynth, Strategy};
use crate::error::{Error, Result};
use crate::gf2::BitMatrix;
use crate::greedy::{greedy_synth, CostKind, GreedyConfig, GreedyOutcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Gaussian,
    Kutin,
    DaCSynth(Strategy),
    Greedy(CostKind),
    LuGreedy(CostKind),
    /// Block construction for parity tables with ancillas.
    AncillaBlock,
    /// Square synthesis of a chunk's full operator when tables are known.
    AncillaDirect,
}

impl Method {
    /// Whether the method synthesizes square operators on its own.
    pub fn is_square(&self) -> bool {
        !matches!(self, Method::AncillaBlock | Method::AncillaDirect)
    }

    /// Runs a square method. `Ok(None)` means the method gave up (greedy
    /// local minimum or reset limit).
    pub fn run(&self, a: &BitMatrix, seed: u64) -> Result<Option<SynthesisResult>> {
        let res = match *self {
            Method::Gaussian => gaussian_synth(a)?,
            Method::Kutin => kutin_synth(a)?,
            Method::DaCSynth(s) => dacsynth(a, s)?,
            Method::Greedy(cost) => return greedy(a, GreedyConfig::new(cost, seed)),
            Method::LuGreedy(cost) => return greedy(a, GreedyConfig::new(cost, seed).with_lu()),
            Method::AncillaBlock | Method::AncillaDirect => {
                return Err(Error::UnknownMethod(format!("{self} needs parity tables")))
            }
        };
        Ok(Some(res))
    }
}

fn greedy(a: &BitMatrix, cfg: GreedyConfig) -> Result<Option<SynthesisResult>> {
    Ok(match greedy_synth(a, &cfg)? {
        GreedyOutcome::Success(r, _) => Some(r),
        GreedyOutcome::Failure(stats) => {
            log::debug!(
                "{} gave up after {} steps",
                cfg.method_name(),
                stats.steps.len()
            );
            None
        }
    })
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self {
            Method::Gaussian => "gaussian".to_string(),
            Method::Kutin => "kutin".to_string(),
            Method::DaCSynth(s) => s.method_name(),
            Method::Greedy(c) => format!("greedy:{c}"),
            Method::LuGreedy(c) => format!("lu+greedy:{c}"),
            Method::AncillaBlock => "ancilla-block".to_string(),
            Method::AncillaDirect => "ancilla-direct".to_string(),
        };
        // pad so report columns line up
        f.pad(&tag)
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let unknown = || Error::UnknownMethod(s.to_string());
        let s = s.trim();
        Ok(match s {
            "gaussian" => Method::Gaussian,
            "kutin" => Method::Kutin,
            "dacsynth" => Method::DaCSynth(Strategy::Greedy),
            "ancilla-block" => Method::AncillaBlock,
            "ancilla-direct" => Method::AncillaDirect,
            _ => {
                let (head, arg) = s.split_once(':').ok_or_else(unknown)?;
                match head {
                    "dacsynth-tiled" => {
                        let k: usize = arg.parse().map_err(|_| unknown())?;
                        if k == 0 {
                            return Err(unknown());
                        }
                        Method::DaCSynth(Strategy::Tiled(k))
                    }
                    "greedy" => Method::Greedy(arg.parse().map_err(|_| unknown())?),
                    "lu+greedy" => Method::LuGreedy(arg.parse().map_err(|_| unknown())?),
                    _ => return Err(unknown()),
                }
            }
        })
    }
}

/// Ordered, non-empty list of methods plus the seed handed to randomized ones.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Portfolio {
    methods: Vec<Method>,
    pub seed: u64,
}

impl Portfolio {
    pub fn new(methods: Vec<Method>, seed: u64) -> Result<Self> {
        if methods.is_empty() {
            return Err(Error::UnknownMethod(String::new()));
        }
        Ok(Portfolio { methods, seed })
    }

    /// Comma-separated tags.
    pub fn parse(list: &str, seed: u64) -> Result<Self> {
        let methods = list
            .split(',')
            .filter(|t| !t.trim().is_empty())
            .map(str::parse)
            .collect::<Result<Vec<_>>>()?;
        Portfolio::new(methods, seed)
    }

    /// Baselines, DaCSynth and every greedy cost with and without LU.
    pub fn full(seed: u64) -> Self {
        let mut methods = vec![
            Method::Gaussian,
            Method::Kutin,
            Method::DaCSynth(Strategy::Greedy),
        ];
        methods.extend(CostKind::ALL.iter().map(|&c| Method::Greedy(c)));
        methods.extend(CostKind::ALL.iter().map(|&c| Method::LuGreedy(c)));
        Portfolio { methods, seed }
    }

    pub fn methods(&self) -> &[Method] {
        &self.methods
    }

    pub fn contains(&self, m: Method) -> bool {
        self.methods.contains(&m)
    }

    pub fn square_methods(&self) -> impl Iterator<Item = Method> + '_ {
        self.methods.iter().copied().filter(Method::is_square)
    }

    /// Runs every square method on `a`, verifying each circuit.
    pub fn run(&self, a: &BitMatrix) -> Result<PortfolioOutcome> {
        let mut runs = Vec::new();
        for m in self.square_methods() {
            let start = Instant::now();
            let result = m.run(a, self.seed)?;
            let ms = start.elapsed().as_millis();
            if let Some(r) = &result {
                assert!(
                    r.implements(a),
                    "method {m} produced a circuit for the wrong operator"
                );
            }
            runs.push(MethodRun {
                method: m,
                result,
                ms,
            });
        }
        Ok(PortfolioOutcome { runs })
    }

    /// Best square result, or `NoMethodSucceeded`.
    pub fn synthesize(&self, a: &BitMatrix) -> Result<SynthesisResult> {
        self.run(a)?.best().cloned().ok_or(Error::NoMethodSucceeded)
    }

    /// Block method for parity tables, with the portfolio's square methods
    /// synthesizing each diagonal block.
    pub fn ancilla_block(
        &self,
        a_in: &ParityTable,
        a_out: &ParityTable,
    ) -> Result<SynthesisResult> {
        let r = ancilla_synth(a_in, a_out, |d| self.synthesize(d))?;
        Ok(r.with_free_relabel(Method::AncillaBlock.to_string()))
    }
}

#[derive(Debug, Clone)]
pub struct MethodRun {
    pub method: Method,
    pub result: Option<SynthesisResult>,
    pub ms: u128,
}

#[derive(Debug, Clone)]
pub struct PortfolioOutcome {
    pub runs: Vec<MethodRun>,
}

impl PortfolioOutcome {
    /// Minimum depth, then fewer CNOTs, then earlier method.
    pub fn best(&self) -> Option<&SynthesisResult> {
        select_best(self.runs.iter().filter_map(|r| r.result.as_ref()))
    }
}

/// First candidate with minimal `(depth, cnot_count)`.
pub fn select_best<'a>(
    candidates: impl IntoIterator<Item = &'a SynthesisResult>,
) -> Option<&'a SynthesisResult> {
    let mut best: Option<&SynthesisResult> = None;
    for c in candidates {
        if best.is_none_or(|b| (c.depth, c.cnot_count) < (b.depth, b.cnot_count)) {
            best = Some(c);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::random_worst_operator;

    #[test]
    fn tags_round_trip() {
        let tags = [
            "gaussian",
            "kutin",
            "dacsynth",
            "dacsynth-tiled:3",
            "greedy:h_sum",
            "greedy:H_prod",
            "lu+greedy:H_sum",
            "ancilla-block",
            "ancilla-direct",
        ];
        for t in tags {
            assert_eq!(t.parse::<Method>().unwrap().to_string(), t);
        }
        for bad in [
            "",
            "greedy",
            "greedy:x",
            "dacsynth-tiled:0",
            "dacsynth-tiled:a",
            "lu",
        ] {
            assert!(bad.parse::<Method>().is_err(), "{bad}");
        }
        assert!(Portfolio::parse("", 0).is_err());
        let p = Portfolio::parse("kutin, dacsynth", 0).unwrap();
        assert_eq!(
            p.methods(),
            &[Method::Kutin, Method::DaCSynth(Strategy::Greedy)]
        );
    }

    #[test]
    fn trivial_operators() {
        let p = Portfolio::full(1);
        let r = p.synthesize(&BitMatrix::identity(5)).unwrap();
        assert_eq!(r.depth, 0);
        let e = BitMatrix::from_rows(&["100", "010", "101"]);
        for m in p.methods() {
            let r = m.run(&e, 1).unwrap().unwrap();
            assert_eq!(r.cnot_count, 1, "{m}");
        }
    }

    #[test]
    fn portfolio_never_worse_than_kutin() {
        let p = Portfolio::full(2);
        let a = random_worst_operator(16, 9);
        let out = p.run(&a).unwrap();
        let kutin = out.runs.iter().find(|r| r.method == Method::Kutin).unwrap();
        let best = out.best().unwrap();
        assert!(best.depth <= kutin.result.as_ref().unwrap().depth);
        assert!(best.depth <= 32);
    }

    #[test]
    fn selection_order() {
        let a = SynthesisResult::new(
            crate::Circuit::from_cnots(2, [(0, 1)]),
            crate::Permutation::identity(2),
            "a",
        );
        let mut b = a.clone();
        b.method = "b".into();
        assert_eq!(select_best([&a, &b]).unwrap().method, "a");
        let c = SynthesisResult::new(crate::Circuit::new(2), crate::Permutation::identity(2), "c");
        assert_eq!(select_best([&a, &b, &c]).unwrap().method, "c");
    }

    #[test]
    fn ancilla_tags_need_tables() {
        let err = Method::AncillaBlock.run(&BitMatrix::identity(2), 0);
        assert!(matches!(err, Err(Error::UnknownMethod(_))));
    }
}
