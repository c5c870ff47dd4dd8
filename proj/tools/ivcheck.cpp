// Command-line front end: test candidate instruments on a CSV, simulate
// labeled benchmark data, or run the Monte Carlo suite.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ivcheck/ivcheck.hpp"

namespace {

using nlohmann::json;

std::string method_name(ivcheck::HsicMethod m) {
  switch (m) {
    case ivcheck::HsicMethod::Permutation: return "permutation";
    case ivcheck::HsicMethod::Gamma: return "gamma";
    case ivcheck::HsicMethod::LargeScale: return "large-scale";
  }
  return "?";
}

struct TestOptions {
  std::string data_path;
  std::string x_name = "X";
  std::string y_name = "Y";
  std::vector<std::string> z_names;
  std::vector<std::string> w_names;
  std::string alpha = "auto";
  std::string effect = "nonconstant";
  std::string method = "auto";
  int degree_z = 3;
  int degree_x = 2;
  int permutations = 500;
  int num_features = 100;
  std::uint64_t seed = 0;
  bool as_json = false;
};

int run_test(const TestOptions& opt) {
  ivcheck::ColumnRoles roles;
  roles.x_name = opt.x_name;
  roles.y_name = opt.y_name;
  roles.z_names = opt.z_names;
  roles.w_names = opt.w_names;
  const ivcheck::Dataset data = ivcheck::load_csv(opt.data_path, roles);

  ivcheck::ValidityConfig cfg;
  cfg.effect_mode = opt.effect == "constant" ? ivcheck::EffectMode::ConstantEffect
                                             : ivcheck::EffectMode::NonConstantEffect;
  cfg.estimator.instrument_basis_degree = opt.degree_z;
  cfg.estimator.treatment_basis_degree = opt.degree_x;
  cfg.hsic.permutations = opt.permutations;
  cfg.hsic.num_features = opt.num_features;
  if (opt.method == "permutation") cfg.method = ivcheck::HsicMethod::Permutation;
  else if (opt.method == "gamma") cfg.method = ivcheck::HsicMethod::Gamma;
  else if (opt.method == "large-scale") cfg.method = ivcheck::HsicMethod::LargeScale;
  else if (opt.method != "auto") throw ivcheck::ConfigError("unknown HSIC method '" + opt.method + "'");
  if (opt.alpha != "auto") {
    std::size_t used = 0;
    double a = 0.0;
    try {
      a = std::stod(opt.alpha, &used);
    } catch (const std::exception&) {
      throw ivcheck::ConfigError("--alpha expects a real number or 'auto'");
    }
    if (used != opt.alpha.size()) throw ivcheck::ConfigError("--alpha expects a real number or 'auto'");
    cfg.alpha = a;
  }

  json all = json::array();
  for (Eigen::Index j = 0; j < data.num_candidates(); ++j) {
    ivcheck::ValidityConfig per = cfg;
    per.seed = ivcheck::mix_seed(opt.seed, static_cast<std::uint64_t>(j));
    const ivcheck::ValidityResult res = ivcheck::test_instrument(data, j, per);
    const std::string& name = data.z_names[static_cast<std::size_t>(j)];
    const bool reject = res.decision == ivcheck::Decision::RejectH0;
    const ivcheck::FittedEffect& fit = res.fitted;

    if (opt.as_json) {
      json coef = json::array();
      for (Eigen::Index c = 0; c < fit.x_coefficients.size(); ++c) coef.push_back(fit.x_coefficients[c]);
      json wcoef = json::array();
      for (Eigen::Index c = 0; c < fit.w_coefficients.size(); ++c) wcoef.push_back(fit.w_coefficients[c]);
      json item = {
          {"candidate", name},
          {"null_hypothesis", name + " is a valid instrument"},
          {"p_value", res.p_value},
          {"alpha", res.alpha_used},
          {"alpha_rule", opt.alpha == "auto" ? "auto" : "explicit"},
          {"decision", reject ? "reject" : "fail-to-reject"},
          {"hsic", {{"method", method_name(res.independence.method)},
                    {"statistic", res.independence.statistic},
                    {"bandwidth_a", res.independence.bandwidth_a},
                    {"bandwidth_b", res.independence.bandwidth_b},
                    {"n", res.independence.n}}},
          {"effect", {{"method", fit.method == ivcheck::EffectMethod::Tsls ? "tsls" : "control-function"},
                      {"x_basis_degree", fit.x_basis_degree},
                      {"intercept", fit.intercept},
                      {"x_coefficients", coef},
                      {"w_coefficients", wcoef},
                      {"first_stage_strength", fit.first_stage_strength},
                      {"partial_correlation", fit.partial_correlation},
                      {"residual_variance", fit.residual_variance}}},
      };
      if (fit.method == ivcheck::EffectMethod::ControlFunction) {
        item["effect"]["instrument_basis_degree"] = fit.instrument_basis_degree;
        item["effect"]["control_coefficient"] = fit.control_coefficient;
      }
      all.push_back(item);
      continue;
    }

    std::printf("candidate %s\n", name.c_str());
    std::printf("  H0: %s is a valid instrument\n", name.c_str());
    std::printf("  hsic: %s, statistic %.6g, n %lld\n", method_name(res.independence.method).c_str(),
                res.independence.statistic, static_cast<long long>(res.independence.n));
    std::printf("  p-value: %.6g\n", res.p_value);
    std::printf("  alpha: %.6g (%s)\n", res.alpha_used, opt.alpha == "auto" ? "auto" : "explicit");
    std::printf("  decision: %s\n",
                reject ? "reject H0 -- evidence the candidate is invalid"
                       : "fail to reject H0 -- no evidence against the candidate");
    std::printf("  effect: %s, x degree %d, intercept %.6g\n",
                fit.method == ivcheck::EffectMethod::Tsls ? "tsls" : "control-function",
                fit.x_basis_degree, fit.intercept);
    std::printf("  x coefficients:");
    for (Eigen::Index c = 0; c < fit.x_coefficients.size(); ++c) {
      std::printf(" %.6g", fit.x_coefficients[c]);
    }
    std::printf("\n");
    if (fit.w_coefficients.size() > 0) {
      std::printf("  w coefficients:");
      for (Eigen::Index c = 0; c < fit.w_coefficients.size(); ++c) {
        std::printf(" %.6g", fit.w_coefficients[c]);
      }
      std::printf("\n");
    }
    if (fit.method == ivcheck::EffectMethod::ControlFunction) {
      std::printf("  control coefficient: %.6g\n", fit.control_coefficient);
    }
    std::printf("  first-stage strength: %.6g (partial corr %.4f)\n", fit.first_stage_strength,
                fit.partial_correlation);
  }
  if (opt.as_json) std::printf("%s\n", all.dump(2).c_str());
  return 0;
}

struct SimulateOptions {
  std::string scenario;
  long long n = 0;
  std::uint64_t seed = 0;
  std::string out;
};

int run_simulate(const SimulateOptions& opt) {
  const ivcheck::ScenarioSpec spec = ivcheck::scenario_from_name(opt.scenario);
  const ivcheck::LabeledDataset ld = ivcheck::generate(spec, opt.n, opt.seed);
  ivcheck::write_csv(opt.out, ld.data);
  ivcheck::write_metadata(opt.out + ".meta", ld);
  std::printf("wrote %lld rows for scenario %s to %s (labels in %s.meta)\n",
              static_cast<long long>(ld.data.n()), spec.name().c_str(), opt.out.c_str(),
              opt.out.c_str());
  return 0;
}

struct BenchOptions {
  std::string suite = "quick";
  std::vector<std::string> scenarios;
  std::vector<long long> sizes = {2000};
  int replicates = 40;
  std::uint64_t seed = 1;
  int jobs = 1;
  std::string out;
  std::string log;
  std::string format = "tsv";
};

int run_bench(const BenchOptions& opt) {
  ivcheck::BenchConfig cfg;
  if (!opt.scenarios.empty()) {
    for (const std::string& name : opt.scenarios) cfg.scenarios.push_back(ivcheck::scenario_from_name(name));
  } else if (opt.suite == "paper") {
    cfg.scenarios = ivcheck::suite_paper();
  } else if (opt.suite == "quick") {
    cfg.scenarios = ivcheck::suite_quick();
  } else {
    throw ivcheck::ConfigError("unknown suite '" + opt.suite + "' (expected paper or quick)");
  }
  for (long long n : opt.sizes) cfg.sample_sizes.push_back(n);
  cfg.replicates = opt.replicates;
  cfg.master_seed = opt.seed;
  cfg.jobs = opt.jobs;

  const ivcheck::BenchReport report = ivcheck::run_mc(cfg);
  const ivcheck::TableFormat fmt =
      opt.format == "markdown" ? ivcheck::TableFormat::Markdown : ivcheck::TableFormat::Tsv;
  const std::string table = ivcheck::emit_table(report, fmt);
  std::printf("%s", table.c_str());
  if (!opt.out.empty()) {
    std::ofstream f(opt.out);
    if (!f) throw ivcheck::InputError("cannot write file '" + opt.out + "'");
    f << table;
  }
  if (!opt.log.empty()) {
    std::ofstream f(opt.log);
    if (!f) throw ivcheck::InputError("cannot write file '" + opt.log + "'");
    f << ivcheck::emit_log(report);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"instrument validity testing via auxiliary-variable independence"};
  app.require_subcommand(1);
  app.set_config("--config")->description("key=value file; command-line flags win");
  // Lets `ivcheck test --config f` reach the top-level --config option; set
  // before add_subcommand so the subcommands inherit it.
  app.fallthrough();

  TestOptions t;
  CLI::App* test = app.add_subcommand("test", "test candidate instruments on a CSV dataset");
  test->add_option("--data", t.data_path, "CSV file with named columns")->required();
  test->add_option("--x", t.x_name, "treatment column")->capture_default_str();
  test->add_option("--y", t.y_name, "outcome column")->capture_default_str();
  test->add_option("--z", t.z_names, "candidate instrument columns")->required()->expected(1, -1);
  test->add_option("--w", t.w_names, "observed covariate columns")->expected(1, -1);
  test->add_option("--alpha", t.alpha, "significance level, or 'auto' for the 10/n rule")
      ->capture_default_str();
  test->add_option("--effect", t.effect, "treatment effect form")
      ->check(CLI::IsMember({"constant", "nonconstant"}))
      ->capture_default_str();
  test->add_option("--method", t.method, "HSIC p-value method")
      ->check(CLI::IsMember({"auto", "permutation", "gamma", "large-scale"}))
      ->capture_default_str();
  test->add_option("--degree-z", t.degree_z, "instrument polynomial degree (control function)")
      ->capture_default_str();
  test->add_option("--degree-x", t.degree_x, "treatment polynomial degree (control function)")
      ->capture_default_str();
  test->add_option("--permutations", t.permutations, "permutation count")->capture_default_str();
  test->add_option("--num-features", t.num_features, "random Fourier features (large-scale)")
      ->capture_default_str();
  test->add_option("--seed", t.seed, "RNG seed")->capture_default_str();
  test->add_flag("--json", t.as_json, "emit a JSON array instead of text");

  SimulateOptions s;
  CLI::App* sim = app.add_subcommand("simulate", "write a labeled synthetic dataset as CSV");
  sim->add_option("--scenario", s.scenario, "scenario name, e.g. table2-gaussian")->required();
  sim->add_option("--n", s.n, "sample size")->required();
  sim->add_option("--seed", s.seed, "RNG seed")->capture_default_str();
  sim->add_option("--out", s.out, "output CSV path")->required();

  BenchOptions b;
  CLI::App* bench = app.add_subcommand("bench", "run the Monte Carlo benchmark");
  bench->add_option("--suite", b.suite, "scenario suite")
      ->check(CLI::IsMember({"paper", "quick"}))
      ->capture_default_str();
  bench->add_option("--scenario", b.scenarios, "explicit scenario list (overrides --suite)")
      ->expected(1, -1);
  bench->add_option("--sizes", b.sizes, "sample sizes")->expected(1, -1)->capture_default_str();
  bench->add_option("--replicates", b.replicates, "replicates per cell")->capture_default_str();
  bench->add_option("--seed", b.seed, "master seed")->capture_default_str();
  bench->add_option("--jobs", b.jobs, "worker threads")->capture_default_str();
  bench->add_option("--out", b.out, "write the table here as well as stdout");
  bench->add_option("--log", b.log, "write one line per replicate here");
  bench->add_option("--format", b.format, "table format")
      ->check(CLI::IsMember({"tsv", "markdown"}))
      ->capture_default_str();

  try {
    app.parse(argc, argv);
    if (*test) return run_test(t);
    if (*sim) return run_simulate(s);
    if (*bench) return run_bench(b);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const ivcheck::StatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const ivcheck::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
