use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{Chromosome, GaConfig, GaError, Mode, Problem};
use crate::check::{ConstraintId, ValidationReport, Violation};
use crate::expr::SlotId;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Role {
    Unknown,
    Known,
    /// A known that appears in a divisor and must hold a parameter.
    Parameter,
}

struct Budget(usize);

impl Budget {
    fn spend(&mut self) -> bool {
        if self.0 == 0 {
            return false;
        }
        self.0 -= 1;
        true
    }
}

/// Picks which slot each algebraic equation is solved for, processing
/// equations in an order that is itself a valid evaluation order. Once an
/// equation is placed, its remaining free slots are committed as knowns,
/// which rules out algebraic loops by construction. Slots a solution would
/// divide by are reserved for parameters.
fn choose_roles(p: &Problem, rng: &mut ChaCha8Rng, budget: &mut Budget) -> Option<Vec<Role>> {
    let part = p.partition();
    let unknown_vars = part.unknowns();
    let known_vars = part.knowns();
    let can_be = |s: SlotId, vars: &[usize]| vars.iter().any(|&v| p.compatible(s, v));
    let can_unknown: Vec<bool> = (0..p.num_slots())
        .map(|s| can_be(s, &unknown_vars))
        .collect();
    let can_known: Vec<bool> = (0..p.num_slots()).map(|s| can_be(s, &known_vars)).collect();
    let can_param: Vec<bool> = (0..p.num_slots())
        .map(|s| can_be(s, &part.parameters))
        .collect();
    let caps = Caps {
        unknown: &can_unknown,
        known: &can_known,
        param: &can_param,
    };

    let mut roles: Vec<Option<Role>> = vec![None; p.num_slots()];
    for &s in &p.state_slots {
        if !can_unknown[s] || roles[s].is_some() {
            return None;
        }
        roles[s] = Some(Role::Unknown);
    }
    let mut pending: Vec<usize> = (0..p.model.equations.len())
        .filter(|&i| p.model.equations[i].state().is_none())
        .collect();
    pending.shuffle(rng);

    struct Caps<'a> {
        unknown: &'a [bool],
        known: &'a [bool],
        param: &'a [bool],
    }

    fn search(
        p: &Problem,
        roles: &mut Vec<Option<Role>>,
        pending: &mut Vec<usize>,
        caps: &Caps,
        rng: &mut ChaCha8Rng,
        budget: &mut Budget,
    ) -> bool {
        if pending.is_empty() {
            return true;
        }
        if !budget.spend() {
            return false;
        }
        let candidates = |eq: usize, roles: &[Option<Role>]| -> Vec<(SlotId, &[SlotId])> {
            p.solvable[eq]
                .iter()
                .filter(|(s, _)| roles[*s].is_none() && caps.unknown[*s])
                .filter(|(s, _)| {
                    p.eq_slots[eq]
                        .iter()
                        .all(|&o| o == *s || roles[o].is_some() || caps.known[o])
                })
                .filter(|(_, divs)| {
                    divs.iter()
                        .all(|&d| roles[d] != Some(Role::Unknown) && caps.param[d])
                })
                .map(|(s, divs)| (*s, divs.as_slice()))
                .collect()
        };
        let (pos, mut cands) = pending
            .iter()
            .enumerate()
            .map(|(k, &eq)| (k, candidates(eq, roles)))
            .min_by_key(|(_, c)| c.len())
            .expect("pending is non-empty");
        let eq = pending.swap_remove(pos);
        cands.shuffle(rng);
        for (s, divs) in cands {
            let mut previous = vec![(s, roles[s])];
            roles[s] = Some(Role::Unknown);
            for &d in divs {
                previous.push((d, roles[d]));
                roles[d] = Some(Role::Parameter);
            }
            for &o in &p.eq_slots[eq] {
                if roles[o].is_none() {
                    previous.push((o, None));
                    roles[o] = Some(Role::Known);
                }
            }
            if search(p, roles, pending, caps, rng, budget) {
                return true;
            }
            for (o, r) in previous.into_iter().rev() {
                roles[o] = r;
            }
        }
        pending.push(eq);
        let last = pending.len() - 1;
        pending.swap(pos, last);
        false
    }

    if !search(p, &mut roles, &mut pending, &caps, rng, budget) {
        return None;
    }
    Some(
        roles
            .into_iter()
            .map(|r| r.unwrap_or(Role::Known))
            .collect(),
    )
}

/// Injectively fills `slots` from `required ∪ optional`, using every
/// required variable. Required variables go first to uniformly chosen
/// compatible slots; the rest are filled most-constrained-first with
/// backtracking.
fn fill(
    p: &Problem,
    slots: &[SlotId],
    required: &[usize],
    optional: &[usize],
    genes: &mut [usize],
    rng: &mut ChaCha8Rng,
    budget: &mut Budget,
) -> bool {
    let mut open: Vec<SlotId> = slots.to_vec();
    let mut req = required.to_vec();
    req.shuffle(rng);
    for v in req {
        let options: Vec<usize> = (0..open.len())
            .filter(|&k| p.compatible(open[k], v))
            .collect();
        let Some(&k) = options.choose(rng) else {
            return false;
        };
        genes[open.swap_remove(k)] = v;
    }

    fn dfs(
        p: &Problem,
        open: &mut Vec<SlotId>,
        free: &mut Vec<usize>,
        genes: &mut [usize],
        rng: &mut ChaCha8Rng,
        budget: &mut Budget,
    ) -> bool {
        if open.is_empty() {
            return true;
        }
        if !budget.spend() {
            return false;
        }
        let (k, mut options) = open
            .iter()
            .enumerate()
            .map(|(k, &s)| {
                (
                    k,
                    free.iter()
                        .copied()
                        .filter(|&v| p.compatible(s, v))
                        .collect::<Vec<_>>(),
                )
            })
            .min_by_key(|(_, o)| o.len())
            .expect("open is non-empty");
        let slot = open.swap_remove(k);
        options.shuffle(rng);
        for v in options {
            let at = free
                .iter()
                .position(|&x| x == v)
                .expect("option drawn from free");
            free.swap_remove(at);
            genes[slot] = v;
            if dfs(p, open, free, genes, rng, budget) {
                return true;
            }
            free.push(v);
        }
        open.push(slot);
        let last = open.len() - 1;
        open.swap(k, last);
        false
    }

    let mut free: Vec<usize> = optional.to_vec();
    dfs(p, &mut open, &mut free, genes, rng, budget)
}

fn construct(p: &Problem, cfg: &GaConfig, rng: &mut ChaCha8Rng) -> Option<Chromosome> {
    let mut budget = Budget(cfg.backtrack_budget);
    let roles = choose_roles(p, rng, &mut budget)?;
    let part = p.partition();
    let unknown_slots: Vec<SlotId> = (0..roles.len())
        .filter(|&s| roles[s] == Role::Unknown)
        .collect();
    let known_slots: Vec<SlotId> = (0..roles.len())
        .filter(|&s| roles[s] == Role::Known)
        .collect();
    let param_slots: Vec<SlotId> = (0..roles.len())
        .filter(|&s| roles[s] == Role::Parameter)
        .collect();
    let mut genes = vec![usize::MAX; p.num_slots()];
    if !fill(
        p,
        &unknown_slots,
        &part.outputs,
        &part.locals,
        &mut genes,
        rng,
        &mut budget,
    ) || !fill(
        p,
        &param_slots,
        &[],
        &part.parameters,
        &mut genes,
        rng,
        &mut budget,
    ) {
        return None;
    }
    let spare: Vec<usize> = part
        .parameters
        .iter()
        .copied()
        .filter(|v| !genes.contains(v))
        .collect();
    let ok = fill(
        p,
        &known_slots,
        &part.inputs,
        &spare,
        &mut genes,
        rng,
        &mut budget,
    );
    ok.then(|| Chromosome::new(genes))
}

fn random_injective(p: &Problem, rng: &mut ChaCha8Rng) -> Chromosome {
    let mut all: Vec<usize> = (0..p.variables.len()).collect();
    let (picked, _) = all.partial_shuffle(rng, p.num_slots());
    Chromosome::new(picked.to_vec())
}

pub fn generate_individual(
    mode: Mode,
    p: &Problem,
    cfg: &GaConfig,
    rng: &mut ChaCha8Rng,
) -> Result<Chromosome, GaError> {
    if p.num_slots() > p.variables.len() {
        return Err(GaError::SlotsExceedVariables {
            slots: p.num_slots(),
            variables: p.variables.len(),
        });
    }
    if mode == Mode::Cbt {
        return Ok(random_injective(p, rng));
    }
    let mut last = None;
    for _ in 0..cfg.retry_budget.max(1) {
        match construct(p, cfg, rng) {
            Some(c) if p.is_admissible(&c) => return Ok(c),
            Some(c) => last = Some(c),
            None => {}
        }
    }
    let report = match last {
        Some(c) => {
            let mut r = p.validate(&c);
            if r.valid {
                r = ValidationReport {
                    valid: false,
                    violations: vec![Violation {
                        constraint: ConstraintId::C3,
                        detail: "constraint-satisfying assignment does not causalize".into(),
                    }],
                };
            }
            r
        }
        None => ValidationReport {
            valid: false,
            violations: vec![Violation {
                constraint: ConstraintId::C1,
                detail: "no type-compatible assignment of slots to variables was found".into(),
            }],
        },
    };
    Err(GaError::ConstraintsUnsatisfiable(report))
}

fn swapped(c: &Chromosome, i: usize, j: usize) -> Chromosome {
    let mut g = c.genes.clone();
    g.swap(i, j);
    Chromosome::new(g)
}

pub fn mutate(
    mode: Mode,
    c: &Chromosome,
    p: &Problem,
    cfg: &GaConfig,
    rng: &mut ChaCha8Rng,
) -> Chromosome {
    let n = c.len();
    if n < 2 {
        return c.clone();
    }
    match mode {
        Mode::Cbt => {
            let i = rng.gen_range(0..n);
            let mut j = rng.gen_range(0..n - 1);
            if j >= i {
                j += 1;
            }
            swapped(c, i, j)
        }
        Mode::Cbc => {
            let mut pairs: Vec<(usize, usize)> = (0..n)
                .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
                .filter(|&(i, j)| p.compatible(i, c.genes[j]) && p.compatible(j, c.genes[i]))
                .collect();
            pairs.shuffle(rng);
            pairs
                .into_iter()
                .take(cfg.retry_budget)
                .map(|(i, j)| swapped(c, i, j))
                .find(|m| p.is_admissible(m))
                .unwrap_or_else(|| c.clone())
        }
    }
}

/// Single-point child `a[..k] ++ b[k..]` with head genes that also occur in
/// the tail replaced through the positional mapping `b[i] -> a[i]` for
/// `i >= k`. With `typed`, a replacement must fit its slot's type.
pub fn pmx_repair(
    a: &Chromosome,
    b: &Chromosome,
    k: usize,
    typed: Option<&Problem>,
) -> Option<Chromosome> {
    let tail: HashMap<usize, usize> = b.genes[k..]
        .iter()
        .enumerate()
        .map(|(i, &g)| (g, k + i))
        .collect();
    let mut genes = a.genes[..k].to_vec();
    for (pos, g) in genes.iter_mut().enumerate() {
        let mut r = *g;
        let mut hops = 0;
        while let Some(&i) = tail.get(&r) {
            r = a.genes[i];
            hops += 1;
            if hops > a.len() {
                return None;
            }
        }
        if let Some(p) = typed {
            if r != *g && !p.compatible(pos, r) {
                return None;
            }
        }
        *g = r;
    }
    genes.extend_from_slice(&b.genes[k..]);
    Some(Chromosome::new(genes))
}

fn splice(a: &Chromosome, b: &Chromosome, k: usize) -> Chromosome {
    let mut g = a.genes[..k].to_vec();
    g.extend_from_slice(&b.genes[k..]);
    Chromosome::new(g)
}

pub fn crossover(
    mode: Mode,
    a: &Chromosome,
    b: &Chromosome,
    p: &Problem,
    cfg: &GaConfig,
    rng: &mut ChaCha8Rng,
) -> Result<(Chromosome, Chromosome), GaError> {
    if a.len() != b.len() {
        return Err(GaError::LengthMismatch(a.len(), b.len()));
    }
    let n = a.len();
    if n < 2 {
        return Ok((b.clone(), a.clone()));
    }
    match mode {
        Mode::Cbt => {
            let k = rng.gen_range(1..n);
            if cfg.cbt_repair {
                let c1 = pmx_repair(a, b, k, None).unwrap_or_else(|| a.clone());
                let c2 = pmx_repair(b, a, k, None).unwrap_or_else(|| b.clone());
                Ok((c1, c2))
            } else {
                Ok((splice(a, b, k), splice(b, a, k)))
            }
        }
        Mode::Cbc => {
            for _ in 0..cfg.retry_budget {
                let k = rng.gen_range(1..n);
                let children = pmx_repair(a, b, k, Some(p)).zip(pmx_repair(b, a, k, Some(p)));
                if let Some((c1, c2)) = children {
                    if p.is_admissible(&c1) && p.is_admissible(&c2) {
                        return Ok((c1, c2));
                    }
                }
            }
            Ok((a.clone(), b.clone()))
        }
    }
}
