#pragma once

// Reconstruction study on the unit square: exact source/state pair, seeded
// Gaussian data noise, BLM or BL reconstruction, and the error metrics.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "invsolve/regularize.hpp"

namespace invsolve {

inline constexpr const char* kGeneratorName = "mt19937_64/std::normal_distribution";

struct ExactPair {
  double beta = 0.0;
  NodeField u_truth;
  NodeField y_truth;
};

/// Pointwise exact state and source for a given beta.
double exact_state(double beta, double x1, double x2);
double exact_source(double beta, double x1, double x2);

/// Throws InvalidArgument for beta outside [0, 0.5].
ExactPair exact_pair(double beta, const Mesh& mesh);

struct NoisyData {
  NodeField ydelta;
  double delta_target = 0.0;
  double delta_realized = 0.0;
  std::uint64_t seed = 0;
};

/// ydelta = y_truth + (delta / ||g||_M) g with g ~ N(0, I) drawn from
/// mt19937_64(seed).
NoisyData make_noise(const FEOperators& ops, const NodeField& y_truth, double delta_target,
                     std::uint64_t seed);

enum class StartKind { Zero, Source };
enum class Method { Blm, Bl };

const char* to_string(StartKind k);
const char* to_string(Method m);
/// Throw InvalidArgument on unknown names.
StartKind parse_start_kind(const std::string& s);
Method parse_method(const std::string& s);

/// Zero field, or the interpolant of u_truth - 20 sin(pi x1) sin(2 pi x2).
NodeField initial_guess(StartKind kind, const ExactPair& pair, const Mesh& mesh);

struct ExperimentConfig {
  int nh = 128;
  double beta = 0.005;
  double alpha0 = 1.0;
  double r = 0.5;
  double tau = 1.5;
  Method method = Method::Blm;
  StartKind start = StartKind::Source;
  std::vector<double> deltas;
  std::vector<std::uint64_t> seeds{42};
  /// <= 0 selects the method default (60 for BLM, 200000 for BL).
  int max_iter = 0;
  double bl_step = kDefaultLandweberStep;

  int effective_max_iter() const;
  /// Throws InvalidArgument on an unusable configuration.
  void validate() const;
};

struct ExperimentRecord {
  Method method = Method::Blm;
  double beta = 0.0;
  int nh = 0;
  std::uint64_t seed = 0;
  double delta = 0.0;         // realized noise level
  double delta_target = 0.0;
  int n_delta = -1;           // -1 marks a failed run
  double lr = 0.0;
  double e = 0.0;
  double r = 0.0;
  double alpha_final = 0.0;   // NaN for BL
  double cpu_seconds = 0.0;
  Termination terminated_by = Termination::MaxIter;
  bool failed = false;
  std::string error;
};

/// LR = N / (1 + |ln delta|).
double log_rate(int n_delta, double delta);

using RunObserver = std::function<void(const ExperimentRecord&, const MethodResult&)>;

/// One record per (delta, seed). A failing run yields a record with
/// failed = true and the remaining runs continue.
std::vector<ExperimentRecord> run_experiment(const ExperimentConfig& config,
                                             const RunObserver& observer = {});

void write_results_header(std::ostream& os, const ExperimentConfig& config);
void write_result_row(std::ostream& os, const ExperimentRecord& rec);
void write_results_csv(std::ostream& os, const ExperimentConfig& config,
                       const std::vector<ExperimentRecord>& records);

void write_trace_header(std::ostream& os);
/// Comment line identifying the run followed by one row per index.
void write_trace(std::ostream& os, const ExperimentRecord& rec, const MethodResult& result);

}  // namespace invsolve
