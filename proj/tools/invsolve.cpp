// Command-line front end: reconstruction runs, lemma checks, operator dumps.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "invsolve/experiment.hpp"
#include "invsolve/theory_checks.hpp"

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitSolver = 3;

struct RunArgs {
  invsolve::ExperimentConfig config;
  std::string method = "blm";
  std::string start = "source";
  std::string out = "results.csv";
  std::string trace;
};

int do_run(RunArgs& args) {
  args.config.method = invsolve::parse_method(args.method);
  args.config.start = invsolve::parse_start_kind(args.start);
  args.config.validate();

  std::ofstream out(args.out);
  if (!out) throw invsolve::InvalidArgument("cannot open " + args.out + " for writing");
  std::optional<std::ofstream> trace;
  if (!args.trace.empty()) {
    trace.emplace(args.trace);
    if (!*trace) throw invsolve::InvalidArgument("cannot open " + args.trace + " for writing");
    invsolve::write_trace_header(*trace);
  }

  invsolve::write_results_header(out, args.config);
  bool any_failed = false;
  auto observer = [&](const invsolve::ExperimentRecord& rec, const invsolve::MethodResult& res) {
    invsolve::write_result_row(out, rec);
    out.flush();
    if (trace) invsolve::write_trace(*trace, rec, res);
    if (rec.failed) {
      any_failed = true;
      std::cerr << "run failed (delta=" << rec.delta_target << ", seed=" << rec.seed
                << "): " << rec.error << '\n';
    } else {
      std::printf("%s delta=%.3e seed=%llu N=%d E=%.4e (%s, %.2fs)\n",
                  invsolve::to_string(rec.method), rec.delta,
                  static_cast<unsigned long long>(rec.seed), rec.n_delta, rec.e,
                  invsolve::to_string(rec.terminated_by), rec.cpu_seconds);
    }
  };
  invsolve::run_experiment(args.config, observer);
  return any_failed ? kExitSolver : 0;
}

int do_check(const std::string& grid) {
  const auto g = grid == "small" ? invsolve::CheckGrid::Small : invsolve::CheckGrid::Full;
  bool all = true;
  for (const auto& rep : invsolve::run_lemma_suite(g)) {
    std::printf("%s %-24s max_violation=% .3e cases=%ld\n", rep.passed() ? "PASS" : "FAIL",
                rep.lemma_id.c_str(), rep.max_violation, rep.cases_tested);
    if (!rep.passed()) {
      all = false;
      std::printf("     worst: %s\n", rep.worst_case.c_str());
    }
  }
  return all ? 0 : 1;
}

int do_dump(int nh, const std::string& dir) {
  const auto mesh = invsolve::build_mesh(nh);
  const auto ops = invsolve::assemble_operators(mesh);
  const std::filesystem::path base(dir);
  std::filesystem::create_directories(base);
  std::ofstream a(base / "A.mtx"), m(base / "M.mtx"), d(base / "D.mtx");
  invsolve::write_matrix_market(a, ops.A);
  invsolve::write_matrix_market(m, ops.M);
  invsolve::write_matrix_market(d, ops.D);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bouligand-Levenberg-Marquardt reconstruction for -Laplace(y) + max(y,0) = u"};
  app.require_subcommand(1);

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "reconstruct the source for a list of noise levels");
  run_cmd->add_option("--nh", run.config.nh, "vertices per side")->capture_default_str();
  run_cmd->add_option("--beta", run.config.beta, "width of the degenerate strip")
      ->capture_default_str();
  run_cmd->add_option("--alpha0", run.config.alpha0)->capture_default_str();
  run_cmd->add_option("--r", run.config.r, "ratio of the alpha schedule")->capture_default_str();
  run_cmd->add_option("--tau", run.config.tau, "discrepancy factor")->capture_default_str();
  run_cmd->add_option("--method", run.method, "blm or bl")->capture_default_str();
  run_cmd->add_option("--u0", run.start, "zero or source")->capture_default_str();
  run_cmd->add_option("--deltas", run.config.deltas, "noise levels")
      ->delimiter(',')
      ->required();
  run_cmd->add_option("--seed", run.config.seeds, "noise seed(s)")
      ->delimiter(',')
      ->capture_default_str();
  run_cmd->add_option("--max-iter", run.config.max_iter, "0 = method default");
  run_cmd->add_option("--bl-step", run.config.bl_step, "Landweber step size")
      ->capture_default_str();
  run_cmd->add_option("--out", run.out, "results CSV")->capture_default_str();
  run_cmd->add_option("--trace", run.trace, "per-iteration trace CSV");

  std::string grid = "full";
  auto* check_cmd = app.add_subcommand("check", "run the parameter-sequence and spectral checks");
  check_cmd->add_option("--grid", grid, "small or full")
      ->check(CLI::IsMember({"small", "full"}))
      ->capture_default_str();

  int dump_nh = 5;
  std::string dump_dir = ".";
  auto* dump_cmd = app.add_subcommand("dump", "write A, M, D in MatrixMarket format");
  dump_cmd->add_option("--nh", dump_nh)->capture_default_str();
  dump_cmd->add_option("--out-dir", dump_dir)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  try {
    if (*run_cmd) return do_run(run);
    if (*check_cmd) return do_check(grid);
    if (*dump_cmd) return do_dump(dump_nh, dump_dir);
  } catch (const invsolve::InvalidArgument& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "solver failure: " << e.what() << '\n';
    return kExitSolver;
  }
  return 0;
}
