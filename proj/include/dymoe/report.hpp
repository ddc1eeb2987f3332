#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dymoe/theorem.hpp"
#include "dymoe/trainer.hpp"

namespace dymoe {

// One run's metrics.json payload. matrix holds the defined upper-triangle
// cells row by row: entry [i-1] is {a_{i,i}, ..., a_{i,t}}.
struct RunReport {
    std::string method;
    std::uint64_t seed = 0;
    std::size_t k = 0;
    double p = 0.0;
    std::string mode;
    std::size_t t = 0;
    std::vector<std::vector<double>> matrix;
    double aa = 0.0;
    double af = 0.0;
    std::vector<double> diagonal;
    std::vector<double> wall_times;  // training seconds per block
};

RunReport make_run_report(const std::string& method, const TrainConfig& cfg,
                          const RunResult& res);

void write_metrics_json(const std::string& path, const RunReport& report);
RunReport read_metrics_json(const std::string& path);

// Combined CSV, one row per run, sorted by (method, k, p, seed). Diagonal
// columns are padded out to the longest run; shorter runs leave them blank.
void write_report_csv(const std::string& path, std::vector<RunReport> rows);

void write_theorem_report(const std::string& path, const MixtureSpec& spec,
                          const TheoremResult& result, const std::vector<SweepPoint>& sweep);

}  // namespace dymoe
