//! Random small models and a brute-force trajectory oracle for the EFE tests.
#![allow(dead_code, clippy::needless_range_loop)]

use hems_core::inference::{
    AgentModel, Categorical, ConditionalTable, ExogenousForecast, Parent, Preferences,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// How the second factor's transition is wired.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SecondParent {
    /// Reads the first factor's freshly updated value.
    UpdatedFirst,
    /// Reads its own previous value.
    OwnPrevious,
    /// Reads both; mean-field and exact marginals can differ here.
    Both,
}

/// Plain nested-array description of a two-factor, one-exogenous model.
#[derive(Debug, Clone)]
pub struct RawModel {
    pub n_a: usize,
    pub n_b: usize,
    pub n_e: usize,
    pub n_oa: usize,
    pub n_ob: usize,
    pub actions: usize,
    pub horizon: usize,
    pub wiring: SecondParent,
    /// ta[a][e][act] -> dist over next a
    pub ta: Vec<Vec<Vec<Vec<f64>>>>,
    /// tb[x][y][act] -> dist over next b; x,y depend on wiring (unused axis has size 1)
    pub tb: Vec<Vec<Vec<Vec<f64>>>>,
    /// la[s] -> dist over oa
    pub la: Vec<Vec<f64>>,
    pub lb: Vec<Vec<f64>>,
    pub ca: Vec<f64>,
    pub cb: Vec<f64>,
    pub qa0: Vec<f64>,
    pub qb0: Vec<f64>,
    /// forecast[k] -> dist over e
    pub forecast: Vec<Vec<f64>>,
}

fn random_dist(rng: &mut ChaCha8Rng, n: usize, sparse: bool) -> Vec<f64> {
    loop {
        let mut v: Vec<f64> = (0..n)
            .map(|_| {
                if sparse && rng.random_bool(0.3) {
                    0.0
                } else {
                    -rng.random::<f64>().max(1e-12).ln()
                }
            })
            .collect();
        let s: f64 = v.iter().sum();
        if s > 0.0 {
            v.iter_mut().for_each(|x| *x /= s);
            return v;
        }
    }
}

impl RawModel {
    pub fn random(seed: u64, max_card: usize, max_horizon: usize, wiring: SecondParent) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let card = |rng: &mut ChaCha8Rng| rng.random_range(1..=max_card);
        let n_a = card(&mut rng);
        let n_b = card(&mut rng);
        let n_e = card(&mut rng);
        let n_oa = card(&mut rng);
        let n_ob = card(&mut rng);
        let actions = 2;
        let horizon = rng.random_range(1..=max_horizon);
        let sparse = rng.random_bool(0.5);
        let ta = (0..n_a)
            .map(|_| {
                (0..n_e)
                    .map(|_| {
                        (0..actions)
                            .map(|_| random_dist(&mut rng, n_a, sparse))
                            .collect()
                    })
                    .collect()
            })
            .collect();
        let (x, y) = match wiring {
            SecondParent::UpdatedFirst => (n_a, 1),
            SecondParent::OwnPrevious => (1, n_b),
            SecondParent::Both => (n_a, n_b),
        };
        let tb = (0..x)
            .map(|_| {
                (0..y)
                    .map(|_| {
                        (0..actions)
                            .map(|_| random_dist(&mut rng, n_b, sparse))
                            .collect()
                    })
                    .collect()
            })
            .collect();
        let la = (0..n_a)
            .map(|_| random_dist(&mut rng, n_oa, sparse))
            .collect();
        let lb = (0..n_b)
            .map(|_| random_dist(&mut rng, n_ob, sparse))
            .collect();
        let ca = (0..n_oa).map(|_| rng.random_range(-3.0..1.0)).collect();
        let cb = (0..n_ob).map(|_| rng.random_range(-3.0..1.0)).collect();
        let qa0 = random_dist(&mut rng, n_a, sparse);
        let qb0 = random_dist(&mut rng, n_b, sparse);
        let forecast = (0..horizon)
            .map(|_| random_dist(&mut rng, n_e, false))
            .collect();
        Self {
            n_a,
            n_b,
            n_e,
            n_oa,
            n_ob,
            actions,
            horizon,
            wiring,
            ta,
            tb,
            la,
            lb,
            ca,
            cb,
            qa0,
            qb0,
            forecast,
        }
    }

    pub fn to_model(&self) -> AgentModel {
        let mut b = AgentModel::builder(self.actions, self.horizon);
        let fa = b.factor("a", self.n_a);
        let fb = b.factor("b", self.n_b);
        let e = b.exogenous("e", self.n_e);
        let ta = ConditionalTable::from_fn(self.n_a, vec![self.n_a, self.n_e, self.actions], |p| {
            self.ta[p[0]][p[1]][p[2]].clone()
        })
        .unwrap();
        b.transition(
            fa,
            vec![Parent::Previous(fa), Parent::Exogenous(e)],
            true,
            ta,
        );
        let (parents, cards) = match self.wiring {
            SecondParent::UpdatedFirst => (vec![Parent::Updated(fa)], vec![self.n_a]),
            SecondParent::OwnPrevious => (vec![Parent::Previous(fb)], vec![self.n_b]),
            SecondParent::Both => (
                vec![Parent::Updated(fa), Parent::Previous(fb)],
                vec![self.n_a, self.n_b],
            ),
        };
        let mut shape = cards.clone();
        shape.push(self.actions);
        let wiring = self.wiring;
        let tb = ConditionalTable::from_fn(self.n_b, shape, |p| match wiring {
            SecondParent::UpdatedFirst => self.tb[p[0]][0][p[1]].clone(),
            SecondParent::OwnPrevious => self.tb[0][p[0]][p[1]].clone(),
            SecondParent::Both => self.tb[p[0]][p[1]][p[2]].clone(),
        })
        .unwrap();
        b.transition(fb, parents, true, tb);
        let la = ConditionalTable::from_fn(self.n_oa, vec![self.n_a], |p| self.la[p[0]].clone())
            .unwrap();
        let lb = ConditionalTable::from_fn(self.n_ob, vec![self.n_b], |p| self.lb[p[0]].clone())
            .unwrap();
        b.modality("oa", fa, la, Preferences::new(self.ca.clone()).unwrap());
        b.modality("ob", fb, lb, Preferences::new(self.cb.clone()).unwrap());
        b.build().unwrap()
    }

    pub fn beliefs(&self) -> Vec<Categorical> {
        vec![
            Categorical::new(self.qa0.clone()).unwrap(),
            Categorical::new(self.qb0.clone()).unwrap(),
        ]
    }

    pub fn exogenous_forecast(&self) -> ExogenousForecast {
        ExogenousForecast::new(
            self.forecast
                .iter()
                .map(|d| vec![Categorical::new(d.clone()).unwrap()])
                .collect(),
        )
    }

    fn tb_dist(&self, a_next: usize, b_prev: usize, act: usize) -> &[f64] {
        match self.wiring {
            SecondParent::UpdatedFirst => &self.tb[a_next][0][act],
            SecondParent::OwnPrevious => &self.tb[0][b_prev][act],
            SecondParent::Both => &self.tb[a_next][b_prev][act],
        }
    }

    /// Expected free energy by enumerating every joint state trajectory.
    ///
    /// Builds the exact joint `q(s_k, o_k)` for each step and modality, then
    /// evaluates `E[ln q(s) - ln q(s|o) - ln p(o|C)]` directly.
    pub fn oracle_efe(&self, policy: &[usize]) -> f64 {
        // joint over (a, b) at the current step
        let mut joint = vec![vec![0.0; self.n_b]; self.n_a];
        for a in 0..self.n_a {
            for b in 0..self.n_b {
                joint[a][b] = self.qa0[a] * self.qb0[b];
            }
        }
        let log_c = |c: &[f64]| {
            let m = c.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let z: f64 = c.iter().map(|x| (x - m).exp()).sum();
            c.iter().map(|x| x - m - z.ln()).collect::<Vec<f64>>()
        };
        let lca = log_c(&self.ca);
        let lcb = log_c(&self.cb);
        let mut g = 0.0;
        for (k, &act) in policy.iter().enumerate() {
            let mut next = vec![vec![0.0; self.n_b]; self.n_a];
            for a in 0..self.n_a {
                for b in 0..self.n_b {
                    let w = joint[a][b];
                    if w == 0.0 {
                        continue;
                    }
                    for e in 0..self.n_e {
                        let we = w * self.forecast[k][e];
                        for a2 in 0..self.n_a {
                            let wa = we * self.ta[a][e][act][a2];
                            if wa == 0.0 {
                                continue;
                            }
                            let tb = self.tb_dist(a2, b, act);
                            for b2 in 0..self.n_b {
                                next[a2][b2] += wa * tb[b2];
                            }
                        }
                    }
                }
            }
            joint = next;
            let qa: Vec<f64> = (0..self.n_a).map(|a| joint[a].iter().sum()).collect();
            let qb: Vec<f64> = (0..self.n_b)
                .map(|b| (0..self.n_a).map(|a| joint[a][b]).sum())
                .collect();
            g += Self::step_term(&qa, &self.la, &lca);
            g += Self::step_term(&qb, &self.lb, &lcb);
        }
        g
    }

    fn step_term(qs: &[f64], lik: &[Vec<f64>], log_c: &[f64]) -> f64 {
        let n_o = log_c.len();
        let mut qso = vec![vec![0.0; n_o]; qs.len()];
        let mut qo = vec![0.0; n_o];
        for (s, &q) in qs.iter().enumerate() {
            for o in 0..n_o {
                qso[s][o] = q * lik[s][o];
                qo[o] += qso[s][o];
            }
        }
        let mut total = 0.0;
        for s in 0..qs.len() {
            for o in 0..n_o {
                let j = qso[s][o];
                if j > 0.0 {
                    let post = j / qo[o];
                    total += j * (qs[s].ln() - post.ln() - log_c[o]);
                }
            }
        }
        total
    }
}
