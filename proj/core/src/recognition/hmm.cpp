#include "mesh/recognition/hmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "mesh/util/random.hpp"

namespace mesh::recognition {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double safe_log(double p) { return p > 0.0 ? std::log(p) : kNegInf; }

void dirichlet_row(Rng& rng, double* row, int n) {
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    row[i] = -std::log(1.0 - uniform01(rng));
    sum += row[i];
  }
  for (int i = 0; i < n; ++i) row[i] /= sum;
}

void check_row(const double* row, int n, const char* what, int index) {
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    if (!(row[i] >= 0.0) || !std::isfinite(row[i])) {
      throw std::logic_error(std::string(what) + " row " + std::to_string(index) +
                             " has a negative or non-finite entry");
    }
    sum += row[i];
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw std::logic_error(std::string(what) + " row " + std::to_string(index) + " sums to " +
                           std::to_string(sum));
  }
}

/// Expected sufficient statistics accumulated over the dataset.
struct Stats {
  std::vector<double> initial;
  std::vector<double> transition;
  std::vector<double> emission;
  double log_likelihood = 0.0;

  explicit Stats(int n)
      : initial(static_cast<std::size_t>(n), 0.0),
        transition(static_cast<std::size_t>(n * n), 0.0),
        emission(static_cast<std::size_t>(n * kNumSymbols), 0.0) {}
};

// One scaled forward-backward pass over a single sequence.
void accumulate(const HmmModel& m, std::span<const int> obs, const std::string& team_id,
                Stats& stats, std::vector<double>& alpha, std::vector<double>& beta,
                std::vector<double>& scale) {
  const int n = m.n_states;
  const std::size_t T = obs.size();
  alpha.assign(T * static_cast<std::size_t>(n), 0.0);
  beta.assign(T * static_cast<std::size_t>(n), 0.0);
  scale.assign(T, 0.0);
  auto A = [&](std::size_t t, int i) -> double& { return alpha[t * static_cast<std::size_t>(n) + static_cast<std::size_t>(i)]; };
  auto B = [&](std::size_t t, int i) -> double& { return beta[t * static_cast<std::size_t>(n) + static_cast<std::size_t>(i)]; };

  for (std::size_t t = 0; t < T; ++t) {
    double c = 0.0;
    for (int j = 0; j < n; ++j) {
      double v;
      if (t == 0) {
        v = m.initial[static_cast<std::size_t>(j)];
      } else {
        v = 0.0;
        for (int i = 0; i < n; ++i) v += A(t - 1, i) * m.a(i, j);
      }
      v *= m.b(j, obs[t]);
      A(t, j) = v;
      c += v;
    }
    if (!(c > 0.0) || !std::isfinite(c)) throw HmmUnderflowError(team_id, t);
    scale[t] = c;
    for (int j = 0; j < n; ++j) A(t, j) /= c;
    stats.log_likelihood += std::log(c);
  }

  for (int i = 0; i < n; ++i) B(T - 1, i) = 1.0;
  for (std::size_t t = T - 1; t-- > 0;) {
    for (int i = 0; i < n; ++i) {
      double v = 0.0;
      for (int j = 0; j < n; ++j) v += m.a(i, j) * m.b(j, obs[t + 1]) * B(t + 1, j);
      B(t, i) = v / scale[t + 1];
    }
  }

  for (std::size_t t = 0; t < T; ++t) {
    for (int i = 0; i < n; ++i) {
      const double g = A(t, i) * B(t, i);
      if (t == 0) stats.initial[static_cast<std::size_t>(i)] += g;
      stats.emission[static_cast<std::size_t>(i * kNumSymbols + obs[t])] += g;
    }
    if (t + 1 < T) {
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
          stats.transition[static_cast<std::size_t>(i * n + j)] +=
              A(t, i) * m.a(i, j) * m.b(j, obs[t + 1]) * B(t + 1, j) / scale[t + 1];
        }
      }
    }
  }
}

// Normalizes each row of `counts` into `out`; rows with no expected mass keep
// their previous values.
void normalize_rows(const std::vector<double>& counts, std::vector<double>& out, int rows,
                    int cols) {
  for (int r = 0; r < rows; ++r) {
    const auto begin = counts.begin() + r * cols;
    const double sum = std::accumulate(begin, begin + cols, 0.0);
    if (sum <= 0.0) continue;
    for (int c = 0; c < cols; ++c) {
      out[static_cast<std::size_t>(r * cols + c)] = counts[static_cast<std::size_t>(r * cols + c)] / sum;
    }
  }
}

struct Prepared {
  std::vector<std::vector<int>> sequences;
  std::vector<std::string> ids;
};

Prepared prepare(std::span<const SubtaskTrajectory> dataset) {
  Prepared p;
  for (const auto& traj : dataset) {
    if (traj.symbols.empty()) continue;
    p.sequences.push_back(symbol_indices(traj));
    p.ids.push_back(traj.team_id);
  }
  return p;
}

double e_step(const HmmModel& m, const Prepared& data, Stats& stats) {
  std::vector<double> alpha, beta, scale;
  for (std::size_t s = 0; s < data.sequences.size(); ++s) {
    accumulate(m, data.sequences[s], data.ids[s], stats, alpha, beta, scale);
  }
  return stats.log_likelihood;
}

}  // namespace

HmmUnderflowError::HmmUnderflowError(std::string team_id, std::size_t position)
    : std::runtime_error("forward pass underflow in sequence '" + team_id + "' at position " +
                         std::to_string(position)),
      team_id_(std::move(team_id)) {}

void HmmModel::check_stochastic() const {
  if (n_states < 1) throw std::logic_error("HMM has no states");
  if (initial.size() != static_cast<std::size_t>(n_states) ||
      transition.size() != static_cast<std::size_t>(n_states * n_states) ||
      emission.size() != static_cast<std::size_t>(n_states * kNumSymbols)) {
    throw std::logic_error("HMM parameter blocks have inconsistent sizes");
  }
  check_row(initial.data(), n_states, "initial", 0);
  for (int i = 0; i < n_states; ++i) {
    check_row(transition.data() + i * n_states, n_states, "transition", i);
    check_row(emission.data() + i * kNumSymbols, kNumSymbols, "emission", i);
  }
}

std::vector<int> symbol_indices(const SubtaskTrajectory& trajectory) {
  std::vector<int> out;
  out.reserve(trajectory.symbols.size());
  for (Subtask s : trajectory.symbols) out.push_back(static_cast<int>(s));
  return out;
}

HmmModel random_hmm(int n_states, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  HmmModel m;
  m.n_states = n_states;
  m.initial.resize(static_cast<std::size_t>(n_states));
  m.transition.resize(static_cast<std::size_t>(n_states * n_states));
  m.emission.resize(static_cast<std::size_t>(n_states * kNumSymbols));
  dirichlet_row(rng, m.initial.data(), n_states);
  for (int i = 0; i < n_states; ++i) {
    dirichlet_row(rng, m.transition.data() + i * n_states, n_states);
    dirichlet_row(rng, m.emission.data() + i * kNumSymbols, kNumSymbols);
  }
  return m;
}

HmmFit fit_hmm(std::span<const SubtaskTrajectory> dataset, int n_states, std::uint64_t seed,
               const FitOptions& options) {
  if (dataset.empty()) throw std::invalid_argument("fit_hmm: empty dataset");
  if (n_states < 1 || n_states >= kNumSymbols) {
    throw std::invalid_argument("fit_hmm: number of hidden states must be in [1, 7), got " +
                                std::to_string(n_states));
  }
  if (!(options.tol > 0.0)) throw std::invalid_argument("fit_hmm: tol must be positive");
  if (options.max_iter < 0 || options.restarts < 1) {
    throw std::invalid_argument("fit_hmm: max_iter must be >= 0 and restarts >= 1");
  }
  const Prepared data = prepare(dataset);
  if (data.sequences.empty()) throw std::invalid_argument("fit_hmm: every sequence is empty");

  HmmFit best;
  for (int r = 0; r < options.restarts; ++r) {
    HmmModel model = random_hmm(n_states, mix_seed(seed, static_cast<std::uint64_t>(r)));
    std::vector<double> trace;

    Stats stats(n_states);
    double ll = e_step(model, data, stats);
    trace.push_back(ll);
    for (int it = 0; it < options.max_iter; ++it) {
      const double total_init = std::accumulate(stats.initial.begin(), stats.initial.end(), 0.0);
      for (int i = 0; i < n_states; ++i) {
        model.initial[static_cast<std::size_t>(i)] = stats.initial[static_cast<std::size_t>(i)] / total_init;
      }
      normalize_rows(stats.transition, model.transition, n_states, n_states);
      normalize_rows(stats.emission, model.emission, n_states, kNumSymbols);

      Stats next(n_states);
      const double ll_new = e_step(model, data, next);
      trace.push_back(ll_new);
      stats = std::move(next);
      const double improvement = ll_new - ll;
      ll = ll_new;
      if (improvement < options.tol) break;
    }

    best.restart_log_likelihoods.push_back(ll);
    if (r == 0 || ll > best.log_likelihood_trace.back()) {
      best.model = std::move(model);
      best.log_likelihood_trace = std::move(trace);
      best.restart = r;
    }
  }
  return best;
}

double log_likelihood(const HmmModel& model, std::span<const int> observations) {
  if (observations.empty()) return 0.0;
  Stats stats(model.n_states);
  std::vector<double> alpha, beta, scale;
  accumulate(model, observations, "<sequence>", stats, alpha, beta, scale);
  return stats.log_likelihood;
}

double total_log_likelihood(const HmmModel& model, std::span<const SubtaskTrajectory> dataset) {
  double total = 0.0;
  for (const auto& traj : dataset) {
    if (traj.symbols.empty()) continue;
    const auto obs = symbol_indices(traj);
    Stats stats(model.n_states);
    std::vector<double> alpha, beta, scale;
    accumulate(model, obs, traj.team_id, stats, alpha, beta, scale);
    total += stats.log_likelihood;
  }
  return total;
}

std::vector<int> viterbi_decode(const HmmModel& model, const SubtaskTrajectory& trajectory) {
  return viterbi_decode(model, symbol_indices(trajectory));
}

std::vector<int> viterbi_decode(const HmmModel& model, std::span<const int> obs) {
  const int n = model.n_states;
  const std::size_t T = obs.size();
  if (T == 0) return {};
  std::vector<double> delta(static_cast<std::size_t>(n)), next(static_cast<std::size_t>(n));
  std::vector<int> back(T * static_cast<std::size_t>(n), 0);

  for (int j = 0; j < n; ++j) {
    delta[static_cast<std::size_t>(j)] = safe_log(model.initial[static_cast<std::size_t>(j)]) + safe_log(model.b(j, obs[0]));
  }
  for (std::size_t t = 1; t < T; ++t) {
    for (int j = 0; j < n; ++j) {
      int arg = 0;
      double best = delta[0] + safe_log(model.a(0, j));
      for (int i = 1; i < n; ++i) {
        const double v = delta[static_cast<std::size_t>(i)] + safe_log(model.a(i, j));
        if (v > best) {
          best = v;
          arg = i;
        }
      }
      next[static_cast<std::size_t>(j)] = best + safe_log(model.b(j, obs[t]));
      back[t * static_cast<std::size_t>(n) + static_cast<std::size_t>(j)] = arg;
    }
    std::swap(delta, next);
  }

  std::vector<int> path(T);
  int last = 0;
  for (int j = 1; j < n; ++j) {
    if (delta[static_cast<std::size_t>(j)] > delta[static_cast<std::size_t>(last)]) last = j;
  }
  path[T - 1] = last;
  for (std::size_t t = T - 1; t > 0; --t) {
    path[t - 1] = back[t * static_cast<std::size_t>(n) + static_cast<std::size_t>(path[t])];
  }
  return path;
}

double path_log_probability(const HmmModel& model, std::span<const int> obs,
                            std::span<const int> path) {
  if (obs.size() != path.size()) throw std::invalid_argument("path and observations differ in length");
  if (obs.empty()) return 0.0;
  double lp = safe_log(model.initial[static_cast<std::size_t>(path[0])]) + safe_log(model.b(path[0], obs[0]));
  for (std::size_t t = 1; t < obs.size(); ++t) {
    lp += safe_log(model.a(path[t - 1], path[t])) + safe_log(model.b(path[t], obs[t]));
  }
  return lp;
}

std::vector<int> sample_sequence(const HmmModel& model, std::size_t length, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  auto draw = [&](const double* probs, int n) {
    double u = uniform01(rng);
    for (int i = 0; i < n; ++i) {
      u -= probs[i];
      if (u < 0.0) return i;
    }
    return n - 1;
  };
  std::vector<int> out;
  out.reserve(length);
  int state = draw(model.initial.data(), model.n_states);
  for (std::size_t t = 0; t < length; ++t) {
    if (t > 0) state = draw(model.transition.data() + state * model.n_states, model.n_states);
    out.push_back(draw(model.emission.data() + state * kNumSymbols, kNumSymbols));
  }
  return out;
}

}  // namespace mesh::recognition
