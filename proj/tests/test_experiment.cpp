#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "invsolve/errors.hpp"
#include "invsolve/experiment.hpp"

using namespace invsolve;

namespace {

int node_at(const Mesh& mesh, double x1, double x2) {
  for (int k = 0; k < mesh.dofs(); ++k) {
    const auto& p = mesh.interior_node(k);
    if (std::abs(p[0] - x1) < 1e-12 && std::abs(p[1] - x2) < 1e-12) return k;
  }
  return -1;
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream is(text);
  for (std::string line; std::getline(is, line);) out.push_back(line);
  return out;
}

// Drops the trailing cpu_seconds column.
std::string without_cpu(const std::string& row) { return row.substr(0, row.rfind(',')); }

}  // namespace

TEST_CASE("exact_pair: beta = 0.5 gives zero fields") {
  const Mesh mesh = build_mesh(17);
  const ExactPair pair = exact_pair(0.5, mesh);
  CHECK(pair.y_truth.isZero(0.0));
  CHECK(pair.u_truth.isZero(0.0));
}

TEST_CASE("exact_pair: point value for beta = 0") {
  const Mesh mesh = build_mesh(9);
  const ExactPair pair = exact_pair(0.0, mesh);
  const int k = node_at(mesh, 0.5, 0.25);
  REQUIRE(k >= 0);
  CHECK(pair.y_truth[k] == doctest::Approx(0.0625).epsilon(1e-15));
  CHECK(exact_state(0.0, 0.5, 0.25) == doctest::Approx(0.0625).epsilon(1e-15));
}

TEST_CASE("exact_pair: support of the state") {
  const Mesh mesh = build_mesh(33);
  const double beta = 0.3;
  const ExactPair pair = exact_pair(beta, mesh);
  for (int k = 0; k < mesh.dofs(); ++k) {
    const double x1 = mesh.interior_node(k)[0];
    if (x1 < beta || x1 > 1.0 - beta) {
      CHECK(pair.y_truth[k] == 0.0);
      CHECK(pair.u_truth[k] == 0.0);
    }
  }
}

TEST_CASE("exact_pair: source solves the continuous equation pointwise") {
  // -Laplace y + max(y,0) = u checked by central differences inside the band.
  const double beta = 0.1, e = 1e-4;
  for (double x1 : {0.2, 0.35, 0.5, 0.77}) {
    for (double x2 : {0.1, 0.3, 0.6, 0.9}) {
      auto y = [&](double a, double b) { return exact_state(beta, a, b); };
      const double lap = (y(x1 + e, x2) + y(x1 - e, x2) + y(x1, x2 + e) + y(x1, x2 - e) - 4 * y(x1, x2)) / (e * e);
      CHECK(-lap + std::max(y(x1, x2), 0.0) == doctest::Approx(exact_source(beta, x1, x2)).epsilon(1e-5));
    }
  }
}

TEST_CASE("exact_pair: source norm at the production mesh") {
  const Mesh mesh = build_mesh(512);
  const FEOperators ops = assemble_operators(mesh);
  const ExactPair pair = exact_pair(0.005, mesh);
  CHECK(std::abs(l2_norm(ops, pair.u_truth) - 1.5) < 0.02);
}

TEST_CASE("exact_pair: rejects beta out of range") {
  const Mesh mesh = build_mesh(5);
  CHECK_THROWS_AS(exact_pair(-0.1, mesh), InvalidArgument);
  CHECK_THROWS_AS(exact_pair(0.6, mesh), InvalidArgument);
}

TEST_CASE("make_noise") {
  const Mesh mesh = build_mesh(33);
  const FEOperators ops = assemble_operators(mesh);
  const ExactPair pair = exact_pair(0.005, mesh);

  const NoisyData none = make_noise(ops, pair.y_truth, 0.0, 1);
  CHECK(none.ydelta == pair.y_truth);
  CHECK(none.delta_realized == 0.0);

  for (std::uint64_t seed : {0ull, 1ull, 42ull, 123456789ull}) {
    for (double delta : {1e-2, 1e-5, 3.0}) {
      const NoisyData d = make_noise(ops, pair.y_truth, delta, seed);
      CHECK(std::abs(l2_norm(ops, d.ydelta - pair.y_truth) - delta) <= 1e-12 * delta);
      CHECK(d.delta_realized == l2_norm(ops, pair.y_truth - d.ydelta));
      CHECK(d.seed == seed);
    }
  }

  const NoisyData a = make_noise(ops, pair.y_truth, 1e-3, 1);
  const NoisyData b = make_noise(ops, pair.y_truth, 1e-3, 2);
  const NoisyData a2 = make_noise(ops, pair.y_truth, 1e-3, 1);
  CHECK(a.ydelta != b.ydelta);
  CHECK(std::abs(a.delta_realized - b.delta_realized) <= 1e-12 * 1e-3);
  CHECK(a.ydelta == a2.ydelta);

  CHECK_THROWS_AS(make_noise(ops, pair.y_truth, -1.0, 1), InvalidArgument);
}

TEST_CASE("initial_guess") {
  const Mesh mesh = build_mesh(65);
  const FEOperators ops = assemble_operators(mesh);
  const ExactPair pair = exact_pair(0.005, mesh);

  CHECK(initial_guess(StartKind::Zero, pair, mesh).isZero(0.0));

  const NodeField ubar = initial_guess(StartKind::Source, pair, mesh);
  const int k = node_at(mesh, 0.5, 0.25);
  REQUIRE(k >= 0);
  CHECK(ubar[k] == doctest::Approx(exact_source(0.005, 0.5, 0.25) - 20.0).epsilon(1e-14));
  CHECK(std::abs(l2_norm(ops, ubar - pair.u_truth) - 10.0) < 0.02);
}

TEST_CASE("name parsing") {
  CHECK(parse_method("blm") == Method::Blm);
  CHECK(parse_method("bl") == Method::Bl);
  CHECK(parse_start_kind("zero") == StartKind::Zero);
  CHECK(parse_start_kind("source") == StartKind::Source);
  CHECK_THROWS_AS(parse_method("lm"), InvalidArgument);
  CHECK_THROWS_AS(parse_start_kind("ubar"), InvalidArgument);
  CHECK(std::string(to_string(Method::Bl)) == "bl");
  CHECK(std::string(to_string(StartKind::Source)) == "source");
}

TEST_CASE("log_rate uses the natural logarithm") {
  CHECK(log_rate(12, 1.056e-2) == doctest::Approx(2.1619).epsilon(5e-5));
  CHECK(log_rate(0, 0.5) == 0.0);
}

TEST_CASE("config validation") {
  ExperimentConfig cfg;
  cfg.deltas = {1e-2};
  CHECK_NOTHROW(cfg.validate());
  CHECK(cfg.effective_max_iter() == 60);
  cfg.method = Method::Bl;
  CHECK(cfg.effective_max_iter() == 200000);
  cfg.max_iter = 7;
  CHECK(cfg.effective_max_iter() == 7);

  ExperimentConfig bad = cfg;
  bad.deltas = {1e-2, 0.0};
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
  CHECK_THROWS_AS(run_experiment(bad), InvalidArgument);
  bad = cfg;
  bad.deltas.clear();
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
  bad = cfg;
  bad.nh = 2;
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
  bad = cfg;
  bad.tau = 0.9;
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
  bad = cfg;
  bad.r = 1.5;
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
}

TEST_CASE("run_experiment: metric definitions hold on every record") {
  ExperimentConfig cfg;
  cfg.nh = 33;
  cfg.deltas = {1e-2, 1e-3};
  cfg.seeds = {1, 2};
  const Mesh mesh = build_mesh(cfg.nh);
  const FEOperators ops = assemble_operators(mesh);
  const ExactPair pair = exact_pair(cfg.beta, mesh);
  const double unorm = l2_norm(ops, pair.u_truth);

  int observed = 0;
  const auto records = run_experiment(cfg, [&](const ExperimentRecord& rec, const MethodResult& res) {
    ++observed;
    CHECK(res.stop_index == rec.n_delta);
    const double err = l2_norm(ops, pair.u_truth - res.u_final);
    CHECK(rec.e == doctest::Approx(err / unorm).epsilon(1e-13));
    CHECK(rec.r == doctest::Approx(err / std::sqrt(rec.delta)).epsilon(1e-13));
    CHECK(rec.alpha_final == AlphaSchedule(cfg.alpha0, cfg.r).at(rec.n_delta));
  });
  REQUIRE(records.size() == 4);
  CHECK(observed == 4);
  for (const auto& rec : records) {
    CHECK_FALSE(rec.failed);
    CHECK(rec.lr == log_rate(rec.n_delta, rec.delta));
    CHECK(std::abs(rec.delta - rec.delta_target) <= 1e-12 * rec.delta_target);
    CHECK(rec.terminated_by == Termination::Discrepancy);
  }
  // delta-major ordering
  CHECK(records[0].seed == 1);
  CHECK(records[1].seed == 2);
  CHECK(records[0].delta_target == 1e-2);
  CHECK(records[2].delta_target == 1e-3);
}

TEST_CASE("run_experiment: Landweber rows carry no alpha") {
  ExperimentConfig cfg;
  cfg.nh = 17;
  cfg.method = Method::Bl;
  cfg.deltas = {1e-1};
  const auto records = run_experiment(cfg);
  REQUIRE(records.size() == 1);
  CHECK(std::isnan(records[0].alpha_final));
  std::ostringstream os;
  write_result_row(os, records[0]);
  CHECK(os.str().find(",nan,") != std::string::npos);
}

TEST_CASE("run_experiment: capped run is flagged, not failed") {
  ExperimentConfig cfg;
  cfg.nh = 17;
  cfg.deltas = {1e-6};
  cfg.max_iter = 2;
  const auto records = run_experiment(cfg);
  REQUIRE(records.size() == 1);
  CHECK_FALSE(records[0].failed);
  CHECK(records[0].n_delta == 2);
  CHECK(records[0].terminated_by == Termination::MaxIter);
}

TEST_CASE("results CSV layout and reproducibility") {
  ExperimentConfig cfg;
  cfg.nh = 17;
  cfg.deltas = {1e-2, 1e-3};
  cfg.seeds = {5, 6};

  std::ostringstream first, second;
  write_results_csv(first, cfg, run_experiment(cfg));
  write_results_csv(second, cfg, run_experiment(cfg));

  const auto a = lines_of(first.str());
  const auto b = lines_of(second.str());
  REQUIRE(a.size() == 6);
  REQUIRE(b.size() == a.size());
  CHECK(a[0].rfind("# invsolve ", 0) == 0);
  CHECK(a[0].find(std::string("generator=") + kGeneratorName) != std::string::npos);
  CHECK(a[1] == "method,beta,nh,seed,delta,N_delta,LR,E,R,alpha_final,cpu_seconds");
  for (std::size_t i = 2; i < a.size(); ++i) {
    CHECK(std::count(a[i].begin(), a[i].end(), ',') == 10);
    CHECK(without_cpu(a[i]) == without_cpu(b[i]));
  }
}

TEST_CASE("trace CSV") {
  ExperimentConfig cfg;
  cfg.nh = 17;
  cfg.deltas = {1e-2};
  std::ostringstream os;
  write_trace_header(os);
  run_experiment(cfg, [&](const ExperimentRecord& rec, const MethodResult& res) {
    write_trace(os, rec, res);
  });
  const auto lines = lines_of(os.str());
  CHECK(lines[0] == "n,alpha_n,residual,error_to_truth,step_norm,ssn_iters,cg_iters,seconds");
  CHECK(lines[1].rfind("# method=blm seed=42 delta=", 0) == 0);
  REQUIRE(lines.size() >= 3);
  CHECK(lines[2].rfind("0,1,", 0) == 0);
  // the stopping row has no step
  const std::string& last = lines.back();
  CHECK(last.find(",,") != std::string::npos);
}

TEST_CASE("beta = 0.3 row at moderate resolution") {
  ExperimentConfig cfg;
  cfg.nh = 65;
  cfg.beta = 0.3;
  cfg.deltas = {1.058e-2};
  cfg.seeds = {1, 2, 3};
  for (const auto& rec : run_experiment(cfg)) {
    CAPTURE(rec.seed);
    CHECK(std::abs(rec.n_delta - 14) <= 2);
    CHECK(rec.e > 3.10 / 2.0);
    CHECK(rec.e < 3.10 * 2.0);
  }
}

TEST_CASE("property: stopping-index scaling over five decades at nh=128") {
  const std::vector<double> deltas{1e-2, 1e-3, 1e-4, 1e-5, 1e-6};
  ExperimentConfig cfg;
  cfg.nh = 128;
  cfg.deltas = deltas;
  cfg.seeds = {1};
  const auto blm = run_experiment(cfg);
  cfg.method = Method::Bl;
  const auto bl = run_experiment(cfg);
  REQUIRE(blm.size() == deltas.size());
  REQUIRE(bl.size() == deltas.size());

  for (const auto& rec : blm) {
    CAPTURE(rec.delta_target);
    CHECK(rec.lr >= 1.0);
    CHECK(rec.lr <= 3.0);
  }
  // Landweber: at least a threefold increase per decade once delta <= 1e-3
  for (std::size_t i = 1; i + 1 < deltas.size(); ++i) {
    CAPTURE(bl[i].delta_target);
    CAPTURE(bl[i].n_delta);
    CAPTURE(bl[i + 1].n_delta);
    CHECK(bl[i + 1].n_delta >= 3 * bl[i].n_delta);
  }
}
