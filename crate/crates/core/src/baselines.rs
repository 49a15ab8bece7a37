//! Non-learning baselines and small-instance exhaustive oracles.
//!
//! The association oracle fixes beams to MRT and phases to per-IRS coherent alignment,
//! so its optimum is a lower bound on the jointly optimal sum rate, not the optimum itself.

use std::collections::HashMap;
use std::f64::consts::{LN_2, TAU};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::agent::{act, apply_raw_actions, AgentNets, RawAction, SlotConfig, StepRecord};
use crate::channel::ChannelRealization;
use crate::complex::{unit_phasor, Complex, ComplexMatrix};
use crate::env::{
    cell_members, reflected_row, AssociationState, BeamformingConfig, Downlink, NetworkEnv,
    PhaseConfig,
};
use crate::error::{Error, Result};

/// Limits on exhaustive enumeration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleBudget {
    /// Phase grid size B for [`brute_force_phases`].
    pub phase_levels: usize,
    /// Largest candidate count any single enumeration may visit.
    pub max_enumeration: u64,
}

impl Default for OracleBudget {
    fn default() -> Self {
        Self {
            phase_levels: 8,
            max_enumeration: 1_000_000,
        }
    }
}

impl OracleBudget {
    fn check(&self, needed: u128) -> Result<()> {
        if needed > self.max_enumeration as u128 {
            Err(Error::OracleBudget {
                needed,
                cap: self.max_enumeration,
            })
        } else {
            Ok(())
        }
    }
}

/// Maximum ratio transmission with an equal power split across the cell's users.
/// A user with an all-zero effective channel gets a zero beam.
pub fn mrt_beamforming(effective: &[ComplexMatrix], p_max: f64) -> Vec<Vec<Complex>> {
    if effective.is_empty() {
        return Vec::new();
    }
    let amp = (p_max / effective.len() as f64).sqrt();
    effective
        .iter()
        .map(|h| {
            let norm = h.norm();
            if norm == 0.0 {
                vec![Complex::new(0.0, 0.0); h.as_slice().len()]
            } else {
                h.as_slice()
                    .iter()
                    .map(|z| z.conj() * (amp / norm))
                    .collect()
            }
        })
        .collect()
}

/// Per-element terms of the single-user received amplitude: the direct term `H w` and
/// the reflected terms `conj(h_e) (G w)_e` before phase rotation.
fn received_terms(
    m: usize,
    k: usize,
    l: usize,
    channels: &ChannelRealization,
    w: &[Complex],
) -> Result<(Complex, Vec<Complex>)> {
    let direct = channels.direct(m, k).dot(w)?;
    let gw = channels
        .bs_irs(m, l)
        .matmul(&ComplexMatrix::column(w.to_vec()))?;
    let h = channels.irs_user(l, k);
    let terms = h
        .as_slice()
        .iter()
        .zip(gw.as_slice())
        .map(|(he, ge)| he.conj() * ge)
        .collect();
    Ok((direct, terms))
}

/// Phases that rotate every reflected path of user k into phase with its direct path,
/// which maximizes `|(H + h^H Φ G) w|` for this user. With no direct signal the
/// reflected paths are aligned to phase zero.
pub fn phase_align(
    m: usize,
    k: usize,
    l: usize,
    channels: &ChannelRealization,
    w: &[Complex],
) -> Result<Vec<f64>> {
    let (direct, terms) = received_terms(m, k, l, channels, w)?;
    let reference = if direct.norm() > 0.0 {
        direct.arg()
    } else {
        0.0
    };
    Ok(terms
        .iter()
        .map(|c| (reference - c.arg()).rem_euclid(TAU))
        .collect())
}

/// Rate of user k served alone by BS m through IRS l with phases `theta`.
pub fn single_user_rate(
    m: usize,
    k: usize,
    l: usize,
    channels: &ChannelRealization,
    w: &[Complex],
    theta: &[f64],
) -> Result<f64> {
    let (direct, terms) = received_terms(m, k, l, channels, w)?;
    let amp: Complex = direct
        + terms
            .iter()
            .zip(theta)
            .map(|(c, t)| c * unit_phasor(*t))
            .sum::<Complex>();
    Ok((amp.norm_sqr() / channels.noise_power(k)).ln_1p() / LN_2)
}

/// Exhaustive search over the uniform grid `θ_e ∈ {2πb/B}` for the single-user rate.
pub fn brute_force_phases(
    m: usize,
    k: usize,
    l: usize,
    channels: &ChannelRealization,
    w: &[Complex],
    levels: usize,
    budget: &OracleBudget,
) -> Result<(Vec<f64>, f64)> {
    if levels == 0 {
        return Err(Error::Domain("phase grid needs at least one level".into()));
    }
    let (direct, terms) = received_terms(m, k, l, channels, w)?;
    let n = terms.len();
    budget.check((levels as u128).saturating_pow(n as u32))?;
    let grid: Vec<f64> = (0..levels)
        .map(|b| TAU * b as f64 / levels as f64)
        .collect();
    let rotated: Vec<Vec<Complex>> = terms
        .iter()
        .map(|c| grid.iter().map(|t| c * unit_phasor(*t)).collect())
        .collect();
    let mut digits = vec![0usize; n];
    let mut best_digits = digits.clone();
    let mut best_power = f64::NEG_INFINITY;
    loop {
        let amp = direct + (0..n).map(|e| rotated[e][digits[e]]).sum::<Complex>();
        let p = amp.norm_sqr();
        if p > best_power {
            best_power = p;
            best_digits.copy_from_slice(&digits);
        }
        // Odometer increment, last element fastest.
        let mut i = n;
        loop {
            if i == 0 {
                let angles = best_digits.iter().map(|&d| grid[d]).collect();
                return Ok((
                    angles,
                    (best_power / channels.noise_power(k)).ln_1p() / LN_2,
                ));
            }
            i -= 1;
            digits[i] += 1;
            if digits[i] < levels {
                break;
            }
            digits[i] = 0;
        }
    }
}

/// MRT plus phase alignment for one cell under a fixed user-IRS allocation.
const ALIGN_ROUNDS: usize = 3;

/// Best configuration found for one BS given the IRSs it controls.
#[derive(Debug, Clone, PartialEq)]
pub struct CellPlan {
    pub irs_of_user: Vec<(usize, Option<usize>)>,
    pub phases: Vec<(usize, Vec<f64>)>,
    pub beams: Vec<(usize, Vec<Complex>)>,
    pub rate: f64,
}

fn slot_from_plans(
    bs_of_irs: &[usize],
    plans: &[&CellPlan],
    channels: &ChannelRealization,
) -> SlotConfig {
    let dims = channels.dims();
    let mut irs_of_user = vec![None; dims.num_users];
    let mut phases = PhaseConfig::identity(dims.num_irs, dims.irs_elements);
    let mut beams = BeamformingConfig::zeros(dims.num_users, dims.bs_antennas);
    for plan in plans {
        for (k, l) in &plan.irs_of_user {
            irs_of_user[*k] = *l;
        }
        for (l, t) in &plan.phases {
            phases.set(*l, t);
        }
        for (k, w) in &plan.beams {
            beams.set(*k, w.clone());
        }
    }
    SlotConfig {
        assoc: AssociationState {
            bs_of_irs: bs_of_irs.to_vec(),
            irs_of_user,
        },
        phases,
        beams,
    }
}

/// Evaluates one user-IRS allocation of cell m with alternating MRT / phase alignment.
/// Each used IRS aligns to the user it serves with the strongest IRS-user channel.
fn plan_allocation(
    m: usize,
    users: &[usize],
    alloc: &[Option<usize>],
    bs_of_irs: &[usize],
    channels: &ChannelRealization,
    cells: &[usize],
    p_max: f64,
) -> Result<CellPlan> {
    let dims = channels.dims();
    let mut primary: Vec<(usize, usize)> = Vec::new();
    for (&k, l) in users.iter().zip(alloc) {
        if let Some(l) = *l {
            match primary.iter_mut().find(|(irs, _)| *irs == l) {
                Some(entry) => {
                    if channels.irs_user(l, k).norm_sqr() > channels.irs_user(l, entry.1).norm_sqr()
                    {
                        entry.1 = k;
                    }
                }
                None => primary.push((l, k)),
            }
        }
    }
    primary.sort_unstable();
    let mut phases = PhaseConfig::identity(dims.num_irs, dims.irs_elements);
    let effective = |phases: &PhaseConfig| -> Vec<ComplexMatrix> {
        users
            .iter()
            .zip(alloc)
            .map(|(&k, l)| match l {
                None => channels.direct(m, k).clone(),
                Some(l) => {
                    let r = reflected_row(
                        channels.irs_user(*l, k),
                        &phases.phasors(*l),
                        channels.bs_irs(m, *l),
                    );
                    &ComplexMatrix::row(r) + channels.direct(m, k)
                }
            })
            .collect()
    };
    let mut w = mrt_beamforming(&effective(&phases), p_max);
    for _ in 0..ALIGN_ROUNDS {
        for &(l, k) in &primary {
            let idx = users
                .iter()
                .position(|&u| u == k)
                .expect("primary user is in the cell");
            if w[idx].iter().any(|z| z.norm() > 0.0) {
                phases.set(l, &phase_align(m, k, l, channels, &w[idx])?);
            }
        }
        w = mrt_beamforming(&effective(&phases), p_max);
    }
    let mut irs_of_user = vec![None; dims.num_users];
    let mut beams = BeamformingConfig::zeros(dims.num_users, dims.bs_antennas);
    for ((&k, l), wk) in users.iter().zip(alloc).zip(&w) {
        irs_of_user[k] = *l;
        beams.set(k, wk.clone());
    }
    let assoc = AssociationState {
        bs_of_irs: bs_of_irs.to_vec(),
        irs_of_user,
    };
    let rate = Downlink {
        channels,
        assoc: &assoc,
        phases: &phases,
        beams: &beams,
        cells,
    }
    .reward(m)?;
    Ok(CellPlan {
        irs_of_user: users.iter().zip(alloc).map(|(&k, l)| (k, *l)).collect(),
        phases: primary
            .iter()
            .map(|&(l, _)| (l, phases.theta(l).to_vec()))
            .collect(),
        beams: users.iter().copied().zip(w).collect(),
        rate,
    })
}

/// Best plan for cell m over every allocation of its users to {no IRS} ∪ controlled IRSs.
pub fn optimize_cell(
    m: usize,
    bs_of_irs: &[usize],
    channels: &ChannelRealization,
    cells: &[usize],
    p_max: f64,
    budget: &OracleBudget,
) -> Result<CellPlan> {
    let users = cell_members(cells, m);
    let controlled: Vec<usize> = bs_of_irs
        .iter()
        .enumerate()
        .filter(|(_, &b)| b == m)
        .map(|(l, _)| l)
        .collect();
    let choices = controlled.len() + 1;
    let count = (choices as u128).saturating_pow(users.len() as u32);
    budget.check(count)?;
    let mut best: Option<CellPlan> = None;
    let mut digits = vec![0usize; users.len()];
    for _ in 0..count {
        let alloc: Vec<Option<usize>> = digits
            .iter()
            .map(|&d| {
                if d == 0 {
                    None
                } else {
                    Some(controlled[d - 1])
                }
            })
            .collect();
        let plan = plan_allocation(m, &users, &alloc, bs_of_irs, channels, cells, p_max)?;
        if best.as_ref().map_or(true, |b| plan.rate > b.rate) {
            best = Some(plan);
        }
        for d in digits.iter_mut().rev() {
            *d += 1;
            if *d < choices {
                break;
            }
            *d = 0;
        }
    }
    Ok(best.expect("at least one allocation is evaluated"))
}

/// Slot configuration and sum rate for a given BS-IRS map, each cell planned by [`optimize_cell`].
pub fn configure_for_association(
    bs_of_irs: &[usize],
    channels: &ChannelRealization,
    cells: &[usize],
    p_max: f64,
    budget: &OracleBudget,
) -> Result<(SlotConfig, f64)> {
    let plans = (0..channels.dims().num_bs)
        .map(|m| optimize_cell(m, bs_of_irs, channels, cells, p_max, budget))
        .collect::<Result<Vec<_>>>()?;
    let refs: Vec<&CellPlan> = plans.iter().collect();
    let slot = slot_from_plans(bs_of_irs, &refs, channels);
    let rate = Downlink {
        channels,
        assoc: &slot.assoc,
        phases: &slot.phases,
        beams: &slot.beams,
        cells,
    }
    .sum_rate()?;
    Ok((slot, rate))
}

/// Result of the exhaustive association search.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleSolution {
    pub config: SlotConfig,
    pub sum_rate: f64,
}

/// Enumerates every BS-IRS map in `M^L` (lexicographic, IRS 0 most significant) and keeps
/// the first map reaching the highest sum rate.
pub fn brute_force_association(
    channels: &ChannelRealization,
    cells: &[usize],
    p_max: f64,
    budget: &OracleBudget,
) -> Result<OracleSolution> {
    let dims = channels.dims();
    let (num_bs, num_irs) = (dims.num_bs, dims.num_irs);
    let count = (num_bs as u128).saturating_pow(num_irs as u32);
    budget.check(count)?;
    // Cells do not interact, so each (BS, controlled set) is planned once.
    let mut memo: HashMap<(usize, Vec<usize>), CellPlan> = HashMap::new();
    let mut map = vec![0usize; num_irs];
    let mut best: Option<(Vec<usize>, f64)> = None;
    for _ in 0..count {
        let mut total = 0.0;
        for m in 0..num_bs {
            let controlled: Vec<usize> = (0..num_irs).filter(|&l| map[l] == m).collect();
            if !memo.contains_key(&(m, controlled.clone())) {
                let plan = optimize_cell(m, &map, channels, cells, p_max, budget)?;
                memo.insert((m, controlled.clone()), plan);
            }
            total += memo[&(m, controlled)].rate;
        }
        if best.as_ref().map_or(true, |(_, r)| total > *r) {
            best = Some((map.clone(), total));
        }
        for d in map.iter_mut().rev() {
            *d += 1;
            if *d < num_bs {
                break;
            }
            *d = 0;
        }
    }
    let (map, _) = best.expect("at least one association is evaluated");
    let plans: Vec<&CellPlan> = (0..num_bs)
        .map(|m| &memo[&(m, (0..num_irs).filter(|&l| map[l] == m).collect::<Vec<_>>())])
        .collect();
    let config = slot_from_plans(&map, &plans, channels);
    let sum_rate = Downlink {
        channels,
        assoc: &config.assoc,
        phases: &config.phases,
        beams: &config.beams,
        cells,
    }
    .sum_rate()?;
    Ok(OracleSolution { config, sum_rate })
}

/// Chooses a full slot configuration from the current environment state.
pub trait Policy {
    fn configure(&mut self, env: &NetworkEnv) -> Result<SlotConfig>;
}

/// Static BS-IRS map; beams and phases still planned per slot.
#[derive(Debug, Clone)]
pub struct FixedAssociationPolicy {
    pub bs_of_irs: Vec<usize>,
    pub budget: OracleBudget,
}

impl Policy for FixedAssociationPolicy {
    fn configure(&mut self, env: &NetworkEnv) -> Result<SlotConfig> {
        let (slot, _) = configure_for_association(
            &self.bs_of_irs,
            env.channels(),
            env.cells(),
            env.params().p_max,
            &self.budget,
        )?;
        Ok(slot)
    }
}

/// Per-slot exhaustive association search.
#[derive(Debug, Clone)]
pub struct OraclePolicy {
    pub budget: OracleBudget,
}

impl Policy for OraclePolicy {
    fn configure(&mut self, env: &NetworkEnv) -> Result<SlotConfig> {
        Ok(brute_force_association(
            env.channels(),
            env.cells(),
            env.params().p_max,
            &self.budget,
        )?
        .config)
    }
}

/// Uniform raw actions in `[−1, 1]^{D_a}` for every BS, through the standard decoder.
#[derive(Debug, Clone)]
pub struct RandomPolicy {
    rng: ChaCha8Rng,
}

impl RandomPolicy {
    pub fn new(rng: ChaCha8Rng) -> Self {
        Self { rng }
    }

    pub fn sample_raw(&mut self, env: &NetworkEnv) -> Vec<RawAction> {
        let dims = env.dims();
        (0..dims.num_bs)
            .map(|_| {
                RawAction(
                    (0..dims.action_dim())
                        .map(|_| self.rng.gen_range(-1.0..=1.0))
                        .collect(),
                )
            })
            .collect()
    }
}

impl Policy for RandomPolicy {
    fn configure(&mut self, env: &NetworkEnv) -> Result<SlotConfig> {
        let raw = self.sample_raw(env);
        apply_raw_actions(env, &raw)
    }
}

/// Noise-free actors, one per BS.
#[derive(Debug, Clone)]
pub struct GreedyPolicy {
    pub nets: Vec<AgentNets>,
}

impl Policy for GreedyPolicy {
    fn configure(&mut self, env: &NetworkEnv) -> Result<SlotConfig> {
        let mut no_noise = rand::rngs::mock::StepRng::new(0, 0);
        let raw = self
            .nets
            .iter()
            .enumerate()
            .map(|(m, nets)| act(nets, &env.observe(m).0, 0.0, &mut no_noise))
            .collect::<Result<Vec<_>>>()?;
        apply_raw_actions(env, &raw)
    }
}

/// Runs `policy` for `episodes × steps` slots and reports one record per slot.
pub fn rollout<P, F>(
    env: &mut NetworkEnv,
    policy: &mut P,
    episodes: usize,
    steps: usize,
    mut on_step: F,
) -> Result<()>
where
    P: Policy + ?Sized,
    F: FnMut(&StepRecord) -> Result<()>,
{
    for episode in 0..episodes {
        env.reset()?;
        for step in 0..steps {
            let slot = policy.configure(env)?;
            let rewards = env.rewards(&slot.assoc, &slot.phases, &slot.beams)?;
            let num_bs = rewards.len();
            on_step(&StepRecord {
                episode,
                step,
                sum_rate: rewards.iter().sum(),
                rewards,
                critic_loss: vec![None; num_bs],
                actor_objective: vec![None; num_bs],
            })?;
            env.commit_association(slot.assoc);
            env.advance()?;
        }
    }
    Ok(())
}
