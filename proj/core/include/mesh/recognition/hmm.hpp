#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mesh/kitchen/types.hpp"
#include "mesh/kitchen/world.hpp"

namespace mesh::recognition {

using kitchen::Subtask;
using kitchen::SubtaskTrajectory;

inline constexpr int kNumSymbols = static_cast<int>(kitchen::kNumSubtasks);

/// Discrete HMM over the 7-symbol subtask alphabet.
/// transition is N x N and emission is N x 7, both row-major.
struct HmmModel {
  int n_states = 0;
  std::vector<double> initial;
  std::vector<double> transition;
  std::vector<double> emission;

  double a(int from, int to) const { return transition[static_cast<std::size_t>(from * n_states + to)]; }
  double b(int state, int symbol) const {
    return emission[static_cast<std::size_t>(state * kNumSymbols + symbol)];
  }

  /// Throws std::logic_error unless every row is a probability vector (tolerance 1e-9).
  void check_stochastic() const;

  friend bool operator==(const HmmModel&, const HmmModel&) = default;
};

class HmmUnderflowError : public std::runtime_error {
 public:
  HmmUnderflowError(std::string team_id, std::size_t position);
  const std::string& team_id() const { return team_id_; }

 private:
  std::string team_id_;
};

struct FitOptions {
  int max_iter = 200;
  double tol = 1e-4;
  int restarts = 5;
};

struct HmmFit {
  HmmModel model;
  /// Total log-likelihood after initialization and after each EM iteration
  /// of the restart that was kept. trace.back() is the returned model's.
  std::vector<double> log_likelihood_trace;
  int restart = 0;
  std::vector<double> restart_log_likelihoods;
};

/// Symbols of a trajectory as integer indices.
std::vector<int> symbol_indices(const SubtaskTrajectory& trajectory);

/// Multi-sequence Baum-Welch with scaled forward-backward. Each restart
/// draws Dirichlet(1) rows from a seed derived from `seed`; the restart with
/// the highest final log-likelihood wins.
HmmFit fit_hmm(std::span<const SubtaskTrajectory> dataset, int n_states, std::uint64_t seed,
               const FitOptions& options = {});

/// Dirichlet(1) random initialization used by fit_hmm.
HmmModel random_hmm(int n_states, std::uint64_t seed);

/// Scaled forward algorithm: log P(observations | model).
double log_likelihood(const HmmModel& model, std::span<const int> observations);
double total_log_likelihood(const HmmModel& model, std::span<const SubtaskTrajectory> dataset);

/// Most likely hidden path in the log domain; ties go to the lower state index.
std::vector<int> viterbi_decode(const HmmModel& model, const SubtaskTrajectory& trajectory);
std::vector<int> viterbi_decode(const HmmModel& model, std::span<const int> observations);

/// log P(path, observations).
double path_log_probability(const HmmModel& model, std::span<const int> observations,
                            std::span<const int> path);

/// Draws a trajectory of length `length` from the model (for synthetic data).
std::vector<int> sample_sequence(const HmmModel& model, std::size_t length, std::uint64_t seed);

}  // namespace mesh::recognition
