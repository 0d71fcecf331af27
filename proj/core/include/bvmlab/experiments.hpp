#pragma once

#include "bvmlab/config.hpp"
#include "bvmlab/report.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace bvmlab {

// Random stream of one replication: RandomSource(seed, stream).substream(substream).
struct ReplicationSeed {
  Index replication = 0;
  double n = 0.0;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  std::uint64_t substream = 0;
};

struct ExperimentResult {
  std::string experiment;
  std::vector<ReportRow> rows;
  std::vector<BoundsRow> bounds;
  std::vector<ReplicationSeed> seeds;
  // Checks that could not be evaluated, e.g. rate fits with too few replications.
  std::vector<std::string> skipped;

  std::vector<const ReportRow*> hard_checks() const;
  std::vector<const ReportRow*> failed_checks() const;
  bool passed() const { return failed_checks().empty(); }
  // Aggregate row by metric name (and n when given); nullptr when absent.
  const ReportRow* find(const std::string& metric, double n = -1.0) const;
};

// Runs the configured experiment in memory. Module errors are rethrown with
// the replication context prepended.
ExperimentResult run_experiment(const ExperimentConfig& config);

struct RunOutcome {
  ExperimentResult result;
  std::vector<std::filesystem::path> files;
  int exit_code = 0;  // 0 when every hard check passes, 1 otherwise
};

// Validates the config, runs it and writes <out>/<experiment>.csv, the
// tail-bound table for validate-bounds, and <out>/manifest.json.
RunOutcome run(const ExperimentConfig& config);

// Worker count: the configured value, else BVM_LAB_JOBS, else the hardware
// concurrency.
unsigned resolve_jobs(unsigned configured);

// Calls task(i) for i in [0, count) on up to `jobs` threads. The first
// exception (lowest index) is rethrown after all workers finish.
void parallel_for(Index count, unsigned jobs, const std::function<void(Index)>& task);

}  // namespace bvmlab
