//! Zero temperature: Gibbs states of `t * phi` as `t` grows, the maximizing
//! value `m(phi)` from a max-mean-cycle oracle, and detection of the limit.

use rayon::prelude::*;

use crate::measure::CylinderMeasure;
use crate::model::{enumerate_words, SubshiftModel, Word};
use crate::potential::Potential;
use crate::transfer::{eigendata, gibbs_cylinders};
use crate::{Error, Result};

/// Maximum mean cycle of the state graph and a cycle attaining it.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanCycle {
    pub value: f64,
    /// Symbols along the cycle: `c_0 -> c_1 -> ... -> c_{n-1} -> c_0`.
    pub cycle: Vec<usize>,
    /// Exact mean of `phi` along `cycle`.
    pub cycle_mean: f64,
}

struct StateGraph {
    states: Vec<Word>,
    /// `(from, to, weight)`
    edges: Vec<(usize, usize, f64)>,
}

/// States are the admissible `(k - 1)`-words; `u -> u_2..u_{k-1} b` whenever
/// `u b` is admissible, weighted by `g(u b)`.
fn state_graph(model: &SubshiftModel, phi: &Potential) -> Result<StateGraph> {
    let g = phi.lift(model, phi.depth().max(2))?;
    let k = g.depth();
    let states = enumerate_words(model, k - 1)?;
    let index = |w: &Word| states.binary_search(w).unwrap();
    let mut edges = Vec::new();
    for (i, u) in states.iter().enumerate() {
        for b in model.admissibility().successors(u.last()) {
            let word = u.append(b);
            edges.push((i, index(&word.suffix_from(1)), g.value(&word)));
        }
    }
    Ok(StateGraph { states, edges })
}

/// Karp's dynamic program for the maximum cycle mean, with a witness found
/// among the edges that are tight for the longest-path potential of the
/// reweighted graph `w - m`.
pub fn max_mean_cycle(model: &SubshiftModel, phi: &Potential) -> Result<MeanCycle> {
    phi.check_against(model)?;
    let graph = state_graph(model, phi)?;
    let n = graph.states.len();
    let neg = f64::NEG_INFINITY;

    let mut d = vec![vec![neg; n]; n + 1];
    d[0][0] = 0.0;
    for j in 1..=n {
        for &(u, v, w) in &graph.edges {
            if d[j - 1][u] > neg {
                d[j][v] = d[j][v].max(d[j - 1][u] + w);
            }
        }
    }
    let mut value = neg;
    for v in 0..n {
        if d[n][v] == neg {
            continue;
        }
        let worst = (0..n)
            .filter(|&j| d[j][v] > neg)
            .map(|j| (d[n][v] - d[j][v]) / (n - j) as f64)
            .fold(f64::INFINITY, f64::min);
        value = value.max(worst);
    }

    let scale = 1.0 + graph.edges.iter().map(|e| e.2.abs()).fold(0.0, f64::max);
    let mut eps = 1e-10 * scale;
    for _ in 0..6 {
        if let Some(states) = tight_cycle(&graph, value, eps) {
            let cycle: Vec<usize> = states.iter().map(|&s| graph.states[s].first()).collect();
            let total: f64 = (0..states.len())
                .map(|i| {
                    let (u, v) = (states[i], states[(i + 1) % states.len()]);
                    graph
                        .edges
                        .iter()
                        .filter(|e| e.0 == u && e.1 == v)
                        .map(|e| e.2)
                        .fold(neg, f64::max)
                })
                .sum();
            return Ok(MeanCycle {
                value,
                cycle_mean: total / states.len() as f64,
                cycle,
            });
        }
        eps *= 10.0;
    }
    Err(Error::NumericalOverflow(
        "no tight cycle found for the max-mean value".into(),
    ))
}

fn tight_cycle(graph: &StateGraph, mean: f64, eps: f64) -> Option<Vec<usize>> {
    let n = graph.states.len();
    let mut h = vec![f64::NEG_INFINITY; n];
    h[0] = 0.0;
    for _ in 0..n {
        let mut changed = false;
        for &(u, v, w) in &graph.edges {
            let cand = h[u] + (w - mean);
            if h[u] > f64::NEG_INFINITY
                && (h[v] == f64::NEG_INFINITY || cand > h[v] + 1e-15 * (1.0 + h[v].abs()))
            {
                h[v] = cand;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let mut succ = vec![Vec::new(); n];
    for &(u, v, w) in &graph.edges {
        if h[u] + (w - mean) >= h[v] - eps {
            succ[u].push(v);
        }
    }
    // iterative DFS for a cycle in the tight subgraph
    let mut color = vec![0u8; n];
    let mut parent = vec![usize::MAX; n];
    for root in 0..n {
        if color[root] != 0 {
            continue;
        }
        let mut stack = vec![(root, 0usize)];
        color[root] = 1;
        while let Some(&mut (u, ref mut next)) = stack.last_mut() {
            if *next < succ[u].len() {
                let v = succ[u][*next];
                *next += 1;
                match color[v] {
                    0 => {
                        color[v] = 1;
                        parent[v] = u;
                        stack.push((v, 0));
                    }
                    1 => {
                        let mut cycle = vec![u];
                        let mut x = u;
                        while x != v {
                            x = parent[x];
                            cycle.push(x);
                        }
                        cycle.reverse();
                        return Some(cycle);
                    }
                    _ => {}
                }
            } else {
                color[u] = 2;
                stack.pop();
            }
        }
    }
    None
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub depth: usize,
    pub temperatures: Vec<f64>,
    /// `log lambda_{t phi}`
    pub pressures: Vec<f64>,
    /// `mu_{t phi}(phi)`
    pub energies: Vec<f64>,
    /// `pressure - t * energy`
    pub entropies: Vec<f64>,
    pub tracks: Vec<CylinderMeasure>,
    /// Total variation at `depth` to the previous track.
    pub tv_to_previous: Vec<Option<f64>>,
    /// Energy at the largest temperature.
    pub m_estimate: f64,
    pub oracle: MeanCycle,
    /// `max_t t * |pressure / t - m|`
    pub slope_constant: f64,
    pub energies_monotone: bool,
    /// Set when the sweep stopped early; the vectors hold the completed prefix.
    pub failure: Option<(f64, Error)>,
    pub potential: Potential,
}

impl SweepResult {
    pub fn slopes(&self) -> Vec<f64> {
        self.pressures
            .iter()
            .zip(&self.temperatures)
            .map(|(p, t)| p / t)
            .collect()
    }
}

/// Gibbs data of `t * phi` for every `t` in `t_list`. Each potential is
/// shifted by `-t * max(phi)` before exponentiation and the shift is added back
/// to the pressure.
pub fn temperature_sweep(
    model: &SubshiftModel,
    phi: &Potential,
    t_list: &[f64],
    depth: usize,
    tol: f64,
    max_iter: usize,
) -> Result<SweepResult> {
    if t_list.is_empty()
        || t_list.iter().any(|&t| !(t.is_finite() && t > 0.0))
        || t_list.windows(2).any(|w| w[1] <= w[0])
    {
        return Err(Error::InvalidTemperatures);
    }
    if depth == 0 {
        return Err(Error::LengthZero);
    }
    phi.check_against(model)?;
    let g = phi.lift(model, phi.depth().max(2))?;
    let k = g.depth();
    let oracle = max_mean_cycle(model, &g)?;
    let top = g.max_value();

    let outcomes: Vec<Result<(f64, f64, CylinderMeasure)>> = t_list
        .par_iter()
        .map(|&t| {
            let shifted = g.map(format!("{t} * phi - {}", t * top), |v| t * (v - top));
            let spec = eigendata(model, &shifted, tol, max_iter)?;
            let gibbs = gibbs_cylinders(model, &shifted, &spec, depth.max(k))?;
            let energy = gibbs.integrate(&g)?;
            Ok((spec.log_lambda() + t * top, energy, gibbs))
        })
        .collect();

    let mut result = SweepResult {
        depth,
        temperatures: Vec::new(),
        pressures: Vec::new(),
        energies: Vec::new(),
        entropies: Vec::new(),
        tracks: Vec::new(),
        tv_to_previous: Vec::new(),
        m_estimate: f64::NAN,
        oracle,
        slope_constant: 0.0,
        energies_monotone: true,
        failure: None,
        potential: g,
    };
    for (&t, outcome) in t_list.iter().zip(outcomes) {
        match outcome {
            Ok((pressure, energy, track)) => {
                let tv = match result.tracks.last() {
                    Some(prev) => Some(prev.total_variation(&track, depth)?),
                    None => None,
                };
                result.temperatures.push(t);
                result.pressures.push(pressure);
                result.energies.push(energy);
                result.entropies.push(pressure - t * energy);
                result.tracks.push(track);
                result.tv_to_previous.push(tv);
            }
            Err(e) => {
                result.failure = Some((t, e));
                break;
            }
        }
    }
    if result.temperatures.is_empty() {
        return Err(result.failure.map(|(_, e)| e).unwrap());
    }
    result.m_estimate = *result.energies.last().unwrap();
    result.slope_constant = result
        .pressures
        .iter()
        .zip(&result.temperatures)
        .map(|(p, t)| (p - t * result.oracle.value).abs())
        .fold(0.0, f64::max);
    result.energies_monotone = result.energies.windows(2).all(|w| w[1] >= w[0] - 1e-9);
    Ok(result)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Selection {
    Selected,
    Oscillating,
    Undecided,
}

impl Selection {
    pub fn as_str(&self) -> &'static str {
        match self {
            Selection::Selected => "selected",
            Selection::Oscillating => "oscillating",
            Selection::Undecided => "undecided",
        }
    }
}

#[derive(Debug, Clone)]
pub struct GroundState {
    pub measure: CylinderMeasure,
    pub flag: Selection,
    /// `nu(phi)` for the returned measure.
    pub value: f64,
    /// Total variations between the last consecutive tracks.
    pub last_tv: Vec<f64>,
    pub diagnostics: String,
}

/// Decide whether the last tracks of a sweep have settled. `Selected` means
/// the last two tracks are within `tol` in total variation and their average
/// integrates `phi` to within `tol` of the oracle value.
pub fn ground_state_detect(
    model: &SubshiftModel,
    sweep: &SweepResult,
    tol: f64,
) -> Result<GroundState> {
    let n = sweep.tracks.len();
    if n < 3 {
        return Err(Error::InsufficientSweep { required: 3, got: n });
    }
    let tv_last = sweep.tv_to_previous[n - 1].unwrap();
    let tv_prev = sweep.tv_to_previous[n - 2].unwrap();
    let measure = CylinderMeasure::average(model, &[&sweep.tracks[n - 2], &sweep.tracks[n - 1]])?;
    let value = measure.integrate(&sweep.potential)?;
    let gap = sweep.oracle.value - value;
    let (flag, diagnostics) = if tv_last <= tol && gap <= tol {
        (
            Selection::Selected,
            format!("last TV {tv_last:e}, oracle gap {gap:e}"),
        )
    } else if tv_last > tol && tv_last >= 0.9 * tv_prev {
        (
            Selection::Oscillating,
            format!("TV not decreasing: {tv_prev:e} -> {tv_last:e}"),
        )
    } else {
        (
            Selection::Undecided,
            format!("last TV {tv_last:e}, oracle gap {gap:e}; extend the sweep"),
        )
    };
    Ok(GroundState {
        measure,
        flag,
        value,
        last_tv: vec![tv_prev, tv_last],
        diagnostics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::catalog::*;

    fn indicator_11(m: &SubshiftModel) -> Potential {
        Potential::from_fn(m, 2, "1[x1=x2=1]", |w| {
            if w.0 == [1, 1] {
                1.0
            } else {
                0.0
            }
        })
        .unwrap()
    }

    #[test]
    fn golden_mean_sum_oracle() {
        let m = golden_mean();
        let phi = Potential::pair_coordinate_sum(&m, 1.0).unwrap();
        let mc = max_mean_cycle(&m, &phi).unwrap();
        assert!((mc.value - 1.0).abs() < 1e-12);
        let mut c = mc.cycle.clone();
        c.sort();
        assert_eq!(c, vec![0, 1]);
        assert!((mc.cycle_mean - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_potential_oracle() {
        let m = two_loops();
        let mc = max_mean_cycle(&m, &Potential::constant(&m, 2, -0.25).unwrap()).unwrap();
        assert!((mc.value + 0.25).abs() < 1e-12);
    }

    #[test]
    fn indicator_oracle_picks_the_loop() {
        let m = full_shift(2);
        let mc = max_mean_cycle(&m, &indicator_11(&m)).unwrap();
        assert!((mc.value - 1.0).abs() < 1e-12);
        assert_eq!(mc.cycle, vec![1]);
    }

    #[test]
    fn depth_three_oracle_uses_word_states() {
        let m = full_shift(2);
        // rewards the pattern 0,1,1 only: best orbit is (011) with mean 1/3
        let phi = Potential::from_fn(&m, 3, "1[011]", |w| (w.0 == [0, 1, 1]) as u8 as f64).unwrap();
        let mc = max_mean_cycle(&m, &phi).unwrap();
        assert!((mc.value - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(mc.cycle.len(), 3);
    }

    #[test]
    fn flat_sweep_for_zero_potential() {
        let m = golden_mean();
        let phi = Potential::zero(&m, 2).unwrap();
        let s = temperature_sweep(&m, &phi, &[1.0, 2.0, 4.0], 3, 1e-12, 100_000).unwrap();
        for p in &s.pressures {
            assert!((p - s.pressures[0]).abs() < 1e-12);
        }
        let gs = ground_state_detect(&m, &s, 1e-4).unwrap();
        assert_eq!(gs.flag, Selection::Selected);
    }

    #[test]
    fn indicator_sweep_concentrates_on_fixed_point() {
        let m = full_shift(2);
        let s = temperature_sweep(&m, &indicator_11(&m), &[1.0, 5.0, 20.0, 50.0], 2, 1e-12, 100_000)
            .unwrap();
        let last = s.tracks.last().unwrap();
        assert!(last.mass(&Word(vec![1, 1])) > 1.0 - 1e-6);
        let slope = s.slopes()[3];
        assert!((slope - 1.0).abs() < 0.05);
        assert!(s.energies_monotone);
    }

    #[test]
    fn invalid_temperatures() {
        let m = golden_mean();
        let phi = Potential::zero(&m, 2).unwrap();
        assert_eq!(
            temperature_sweep(&m, &phi, &[2.0, 1.0], 2, 1e-12, 10).unwrap_err(),
            Error::InvalidTemperatures
        );
        let s = temperature_sweep(&m, &phi, &[1.0, 2.0], 2, 1e-12, 100_000).unwrap();
        assert!(matches!(
            ground_state_detect(&m, &s, 1e-4),
            Err(Error::InsufficientSweep { .. })
        ));
    }
}
