#pragma once

#include <atomic>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "ivcheck/errors.hpp"
#include "ivcheck/simulate.hpp"
#include "ivcheck/validity.hpp"

namespace ivcheck {

struct BenchConfig {
  std::vector<ScenarioSpec> scenarios;
  std::vector<Eigen::Index> sample_sizes;
  int replicates = 40;
  std::uint64_t master_seed = 1;
  int jobs = 1;
  ValidityConfig base;  // effect mode and per-test seed are overridden per task
};

struct ReplicateRecord {
  std::string scenario;
  Eigen::Index n = 0;
  int replicate = 0;
  std::uint64_t seed = 0;
  std::string candidate;  // empty when generation itself failed
  std::string label;
  bool failed = false;
  std::string error;
  double p_value = 0.0;
  bool rejected = false;
};

// One (scenario, n) cell. Both rates count mistakes: a valid candidate is a
// mistake when rejected, an invalid one when it survives the test.
struct BenchCell {
  std::string scenario;
  Eigen::Index n = 0;
  int valid_tested = 0;
  int valid_rejected = 0;
  int invalid_tested = 0;
  int invalid_passed = 0;
  int failures = 0;

  std::optional<double> valid_mr() const {
    if (valid_tested == 0) return std::nullopt;
    return static_cast<double>(valid_rejected) / valid_tested;
  }
  std::optional<double> invalid_mr() const {
    if (invalid_tested == 0) return std::nullopt;
    return static_cast<double>(invalid_passed) / invalid_tested;
  }
};

struct BenchReport {
  std::vector<BenchCell> cells;
  std::vector<ReplicateRecord> records;
};

enum class TableFormat { Tsv, Markdown };

namespace detail {

struct BenchTask {
  std::size_t scenario_index = 0;
  std::size_t size_index = 0;
  int replicate = 0;
};

// Runs one replicate: simulate once, test every candidate. Errors are
// captured per candidate so a single degenerate draw cannot sink the suite.
inline std::vector<ReplicateRecord> run_replicate(const ScenarioSpec& spec, Eigen::Index n,
                                                  int replicate, std::uint64_t seed,
                                                  const ValidityConfig& base) {
  std::vector<ReplicateRecord> out;
  ReplicateRecord proto;
  proto.scenario = spec.name();
  proto.n = n;
  proto.replicate = replicate;
  proto.seed = seed;

  LabeledDataset ld;
  try {
    ld = generate(spec, n, seed);
  } catch (const std::exception& e) {
    proto.failed = true;
    proto.error = e.what();
    out.push_back(proto);
    return out;
  }
  for (Eigen::Index j = 0; j < ld.data.num_candidates(); ++j) {
    ReplicateRecord rec = proto;
    rec.candidate = ld.data.z_names[static_cast<std::size_t>(j)];
    rec.label = validity_name(ld.labels[static_cast<std::size_t>(j)]);
    try {
      ValidityConfig cfg = base;
      cfg.effect_mode = spec.effect_mode();
      cfg.seed = mix_seed(seed, static_cast<std::uint64_t>(j));
      const ValidityResult res = test_instrument(ld.data, j, cfg);
      rec.p_value = res.p_value;
      rec.rejected = res.decision == Decision::RejectH0;
    } catch (const std::exception& e) {
      rec.failed = true;
      rec.error = e.what();
    }
    out.push_back(rec);
  }
  return out;
}

}  // namespace detail

inline BenchReport run_mc(const BenchConfig& cfg) {
  if (cfg.scenarios.empty()) throw ConfigError("benchmark needs at least one scenario");
  if (cfg.sample_sizes.empty()) throw ConfigError("benchmark needs at least one sample size");
  if (cfg.replicates < 1) throw ConfigError("benchmark needs at least one replicate");
  for (Eigen::Index n : cfg.sample_sizes) {
    if (n < 100) throw ConfigError("benchmark sample sizes must be >= 100");
  }

  std::vector<detail::BenchTask> tasks;
  for (std::size_t si = 0; si < cfg.scenarios.size(); ++si) {
    for (std::size_t ni = 0; ni < cfg.sample_sizes.size(); ++ni) {
      for (int r = 0; r < cfg.replicates; ++r) tasks.push_back({si, ni, r});
    }
  }

  // Results land in preallocated slots indexed by task, so the flattened
  // record order (and hence all output) is independent of the worker count.
  std::vector<std::vector<ReplicateRecord>> slots(tasks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= tasks.size()) break;
      const detail::BenchTask& t = tasks[i];
      const std::uint64_t seed = cfg.master_seed + static_cast<std::uint64_t>(t.replicate);
      slots[i] = detail::run_replicate(cfg.scenarios[t.scenario_index],
                                       cfg.sample_sizes[t.size_index], t.replicate, seed, cfg.base);
    }
  };
  const int jobs = std::max(1, cfg.jobs);
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(jobs));
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (std::thread& th : pool) th.join();
  }

  BenchReport report;
  std::vector<BenchCell> grid(cfg.scenarios.size() * cfg.sample_sizes.size());
  for (std::size_t si = 0; si < cfg.scenarios.size(); ++si) {
    for (std::size_t ni = 0; ni < cfg.sample_sizes.size(); ++ni) {
      BenchCell& cell = grid[si * cfg.sample_sizes.size() + ni];
      cell.scenario = cfg.scenarios[si].name();
      cell.n = cfg.sample_sizes[ni];
    }
  }
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    BenchCell& cell = grid[tasks[i].scenario_index * cfg.sample_sizes.size() + tasks[i].size_index];
    for (const ReplicateRecord& rec : slots[i]) {
      if (rec.failed) {
        ++cell.failures;
      } else if (rec.label == validity_name(Validity::Valid)) {
        ++cell.valid_tested;
        if (rec.rejected) ++cell.valid_rejected;
      } else {
        ++cell.invalid_tested;
        if (!rec.rejected) ++cell.invalid_passed;
      }
      report.records.push_back(rec);
    }
  }
  report.cells = std::move(grid);
  return report;
}

inline std::string emit_table(const BenchReport& report, TableFormat format) {
  if (report.cells.empty()) throw ConfigError("cannot render an empty benchmark report");
  auto fmt_rate = [](const std::optional<double>& r) -> std::string {
    if (!r) return "-";
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%.2f", *r);
    return buf;
  };
  std::ostringstream out;
  if (format == TableFormat::Tsv) {
    out << "scenario\tn\tvalid_mr\tinvalid_mr\tfailures\n";
    for (const BenchCell& c : report.cells) {
      out << c.scenario << '\t' << c.n << '\t' << fmt_rate(c.valid_mr()) << '\t'
          << fmt_rate(c.invalid_mr()) << '\t' << c.failures << '\n';
    }
  } else {
    out << "| Scenario | n | Valid MR | Invalid MR | Failures |\n";
    out << "| --- | ---: | ---: | ---: | ---: |\n";
    for (const BenchCell& c : report.cells) {
      out << "| " << c.scenario << " | " << c.n << " | " << fmt_rate(c.valid_mr()) << " | "
          << fmt_rate(c.invalid_mr()) << " | " << c.failures << " |\n";
    }
  }
  return out.str();
}

// One stable line per record, for replay and diffing across runs.
inline std::string emit_log(const BenchReport& report) {
  std::ostringstream out;
  for (const ReplicateRecord& r : report.records) {
    out << "scenario=" << r.scenario << " n=" << r.n << " replicate=" << r.replicate
        << " seed=" << r.seed << " candidate=" << (r.candidate.empty() ? "-" : r.candidate)
        << " label=" << (r.label.empty() ? "-" : r.label);
    if (r.failed) {
      out << " status=error error=\"" << r.error << "\"";
    } else {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%.6g", r.p_value);
      out << " status=ok p=" << buf << " rejected=" << (r.rejected ? 1 : 0);
    }
    out << '\n';
  }
  return out.str();
}

inline std::vector<ScenarioSpec> suite_paper() { return all_scenarios(); }

inline std::vector<ScenarioSpec> suite_quick() {
  std::vector<ScenarioSpec> out;
  for (const char* name : {"table2-gaussian", "table2-uniform", "table3-quadratic",
                           "table4-quadratic", "table5-quadratic", "table8-invalid",
                           "table8-valid", "motivating-linear-gaussian",
                           "motivating-partial-nongaussian", "motivating-nonlinear-gaussian"}) {
    out.push_back(scenario_from_name(name));
  }
  return out;
}

}  // namespace ivcheck
