#include "invsolve/experiment.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <ostream>
#include <random>

#ifndef INVSOLVE_VERSION
#define INVSOLVE_VERSION "dev"
#endif

namespace invsolve {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool in_band(double beta, double x1) { return x1 >= beta && x1 <= 1.0 - beta; }

std::string fmt_real(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

double exact_state(double beta, double x1, double x2) {
  if (!in_band(beta, x1)) return 0.0;
  const double a = x1 - beta;
  const double b = x1 - 1.0 + beta;
  return a * a * b * b * std::sin(2.0 * kPi * x2);
}

double exact_source(double beta, double x1, double x2) {
  const double y = exact_state(beta, x1, x2);
  double u = std::max(y, 0.0);
  if (in_band(beta, x1)) {
    const double c = (2.0 * x1 - 1.0) * (2.0 * x1 - 1.0) + 2.0 * (x1 - 1.0 + beta) * (x1 - beta);
    u += 4.0 * kPi * kPi * y - 2.0 * c * std::sin(2.0 * kPi * x2);
  }
  return u;
}

ExactPair exact_pair(double beta, const Mesh& mesh) {
  if (!(beta >= 0.0 && beta <= 0.5)) {
    throw InvalidArgument("exact_pair: beta must lie in [0, 0.5]");
  }
  ExactPair pair;
  pair.beta = beta;
  pair.y_truth = interpolate([beta](double x1, double x2) { return exact_state(beta, x1, x2); },
                             mesh);
  pair.u_truth = interpolate([beta](double x1, double x2) { return exact_source(beta, x1, x2); },
                             mesh);
  return pair;
}

NoisyData make_noise(const FEOperators& ops, const NodeField& y_truth, double delta_target,
                     std::uint64_t seed) {
  if (!(delta_target >= 0.0)) throw InvalidArgument("make_noise: delta must be nonnegative");
  if (y_truth.size() != ops.dofs()) throw InvalidArgument("make_noise: dimension mismatch");

  NoisyData data;
  data.seed = seed;
  data.delta_target = delta_target;
  if (delta_target == 0.0) {
    data.ydelta = y_truth;
    return data;
  }

  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  NodeField g(ops.dofs());
  double gnorm = 0.0;
  for (int attempt = 0; attempt < 2 && gnorm == 0.0; ++attempt) {
    for (Eigen::Index i = 0; i < g.size(); ++i) g[i] = normal(gen);
    gnorm = l2_norm(ops, g);
  }
  if (gnorm == 0.0) throw SolverError("make_noise: drew a zero noise vector twice");

  data.ydelta = y_truth + (delta_target / gnorm) * g;
  data.delta_realized = l2_norm(ops, y_truth - data.ydelta);
  return data;
}

const char* to_string(StartKind k) { return k == StartKind::Zero ? "zero" : "source"; }
const char* to_string(Method m) { return m == Method::Blm ? "blm" : "bl"; }

StartKind parse_start_kind(const std::string& s) {
  if (s == "zero") return StartKind::Zero;
  if (s == "source") return StartKind::Source;
  throw InvalidArgument("unknown starting guess '" + s + "' (expected zero|source)");
}

Method parse_method(const std::string& s) {
  if (s == "blm") return Method::Blm;
  if (s == "bl") return Method::Bl;
  throw InvalidArgument("unknown method '" + s + "' (expected blm|bl)");
}

NodeField initial_guess(StartKind kind, const ExactPair& pair, const Mesh& mesh) {
  if (kind == StartKind::Zero) return NodeField::Zero(mesh.dofs());
  const NodeField bump = interpolate(
      [](double x1, double x2) { return std::sin(kPi * x1) * std::sin(2.0 * kPi * x2); }, mesh);
  return pair.u_truth - 20.0 * bump;
}

int ExperimentConfig::effective_max_iter() const {
  if (max_iter > 0) return max_iter;
  return method == Method::Blm ? 60 : 200000;
}

void ExperimentConfig::validate() const {
  if (nh < 3) throw InvalidArgument("nh must be >= 3");
  if (!(beta >= 0.0 && beta <= 0.5)) throw InvalidArgument("beta must lie in [0, 0.5]");
  if (!(alpha0 > 0.0)) throw InvalidArgument("alpha0 must be positive");
  if (!(r > 0.0 && r < 1.0)) throw InvalidArgument("r must lie in (0, 1)");
  if (!(tau > 1.0)) throw InvalidArgument("tau must exceed 1");
  if (deltas.empty()) throw InvalidArgument("at least one noise level is required");
  for (double d : deltas) {
    if (!(d > 0.0) || !std::isfinite(d)) {
      throw InvalidArgument("noise levels must be positive and finite: the discrepancy "
                            "principle is undefined at delta = 0");
    }
  }
  if (seeds.empty()) throw InvalidArgument("at least one seed is required");
  if (!(bl_step > 0.0)) throw InvalidArgument("Landweber step must be positive");
}

double log_rate(int n_delta, double delta) {
  return static_cast<double>(n_delta) / (1.0 + std::abs(std::log(delta)));
}

std::vector<ExperimentRecord> run_experiment(const ExperimentConfig& config,
                                             const RunObserver& observer) {
  config.validate();
  const Mesh mesh = build_mesh(config.nh);
  const FEOperators ops = assemble_operators(mesh);
  const ExactPair pair = exact_pair(config.beta, mesh);
  const NodeField u0 = initial_guess(config.start, pair, mesh);
  const double utruth_norm = l2_norm(ops, pair.u_truth);
  const AlphaSchedule sched(config.alpha0, config.r);

  std::vector<ExperimentRecord> records;
  for (double delta : config.deltas) {
    for (std::uint64_t seed : config.seeds) {
      ExperimentRecord rec;
      rec.method = config.method;
      rec.beta = config.beta;
      rec.nh = config.nh;
      rec.seed = seed;
      rec.delta_target = delta;

      const NoisyData data = make_noise(ops, pair.y_truth, delta, seed);
      rec.delta = data.delta_realized;
      StoppingRule rule{config.tau, data.delta_realized, config.effective_max_iter()};

      MethodResult result;
      try {
        result = config.method == Method::Blm
                     ? blm_run(ops, data.ydelta, rule, u0, sched, pair.u_truth)
                     : bl_run(ops, data.ydelta, rule, u0, config.bl_step, pair.u_truth);
      } catch (const DriverFailure& f) {
        rec.failed = true;
        rec.error = f.what();
        rec.n_delta = -1;
        rec.lr = rec.e = rec.r = rec.alpha_final = kNaN;
        rec.cpu_seconds = f.partial().total_seconds;
        if (observer) observer(rec, f.partial());
        records.push_back(std::move(rec));
        continue;
      }

      const double err = l2_norm(ops, pair.u_truth - result.u_final);
      rec.n_delta = result.stop_index;
      rec.terminated_by = result.terminated_by;
      rec.lr = log_rate(rec.n_delta, rec.delta);
      rec.e = utruth_norm > 0.0 ? err / utruth_norm : kNaN;
      rec.r = err / std::sqrt(rec.delta);
      rec.alpha_final = result.alphas.empty() ? kNaN : result.alphas.back();
      rec.cpu_seconds = result.total_seconds;
      if (observer) observer(rec, result);
      records.push_back(std::move(rec));
    }
  }
  return records;
}

void write_results_header(std::ostream& os, const ExperimentConfig& config) {
  os << "# invsolve " << INVSOLVE_VERSION << "; generator=" << kGeneratorName
     << "; alpha0=" << fmt_real(config.alpha0) << "; r=" << fmt_real(config.r)
     << "; tau=" << fmt_real(config.tau) << "; u0=" << to_string(config.start) << '\n';
  os << "method,beta,nh,seed,delta,N_delta,LR,E,R,alpha_final,cpu_seconds\n";
}

void write_result_row(std::ostream& os, const ExperimentRecord& rec) {
  char cpu[32];
  std::snprintf(cpu, sizeof cpu, "%.6f", rec.cpu_seconds);
  os << to_string(rec.method) << ',' << fmt_real(rec.beta) << ',' << rec.nh << ',' << rec.seed
     << ',' << fmt_real(rec.delta) << ',' << rec.n_delta << ',' << fmt_real(rec.lr) << ','
     << fmt_real(rec.e) << ',' << fmt_real(rec.r) << ',' << fmt_real(rec.alpha_final) << ','
     << cpu << '\n';
}

void write_results_csv(std::ostream& os, const ExperimentConfig& config,
                       const std::vector<ExperimentRecord>& records) {
  write_results_header(os, config);
  for (const auto& rec : records) write_result_row(os, rec);
}

void write_trace_header(std::ostream& os) {
  os << "n,alpha_n,residual,error_to_truth,step_norm,ssn_iters,cg_iters,seconds\n";
}

void write_trace(std::ostream& os, const ExperimentRecord& rec, const MethodResult& result) {
  os << "# method=" << to_string(rec.method) << " seed=" << rec.seed
     << " delta=" << fmt_real(rec.delta) << '\n';
  const std::size_t count = result.residuals.size();
  for (std::size_t n = 0; n < count; ++n) {
    auto opt_real = [](const std::vector<double>& v, std::size_t i) {
      return i < v.size() ? fmt_real(v[i]) : std::string();
    };
    auto opt_int = [](const std::vector<int>& v, std::size_t i) {
      return i < v.size() ? std::to_string(v[i]) : std::string();
    };
    char secs[32];
    std::snprintf(secs, sizeof secs, "%.6f", n < result.wall_times.size() ? result.wall_times[n] : 0.0);
    os << n << ',' << opt_real(result.alphas, n) << ',' << fmt_real(result.residuals[n]) << ','
       << opt_real(result.errors_to_truth, n) << ',' << opt_real(result.step_norms, n) << ','
       << opt_int(result.ssn_iters, n) << ',' << opt_int(result.cg_iters, n) << ',' << secs
       << '\n';
  }
}

}  // namespace invsolve
