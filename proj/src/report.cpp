#include "dymoe/report.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <tuple>

#include "json.hpp"

#include "dymoe/errors.hpp"

namespace dymoe {

namespace {

using nlohmann::json;

std::string format_cell(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

json require_field(const json& j, const std::string& path, const char* field) {
    if (!j.contains(field))
        throw data_error("metrics file '" + path + "' is missing field '" + field + "'");
    return j.at(field);
}

}  // namespace

RunReport make_run_report(const std::string& method, const TrainConfig& cfg,
                          const RunResult& res) {
    RunReport out;
    out.method = method;
    out.seed = cfg.seed;
    out.k = cfg.k;
    out.p = cfg.memory_fraction;
    out.mode = cfg.mode == GateMode::sparse ? "sparse" : "dense";
    out.t = res.matrix.blocks();
    for (std::size_t i = 1; i <= out.t; ++i) {
        std::vector<double> row;
        for (std::size_t j = i; j <= out.t; ++j) row.push_back(res.matrix.at(i, j));
        out.matrix.push_back(std::move(row));
    }
    out.aa = res.matrix.average_accuracy();
    out.af = res.matrix.average_forgetting();
    out.diagonal = res.matrix.diagonal();
    out.wall_times = res.train_seconds;
    return out;
}

void write_metrics_json(const std::string& path, const RunReport& report) {
    json j;
    j["method"] = report.method;
    j["seed"] = report.seed;
    j["k"] = report.k;
    j["p"] = report.p;
    j["mode"] = report.mode;
    j["t"] = report.t;
    j["matrix"] = report.matrix;
    j["aa"] = report.aa;
    j["af"] = report.af;
    j["diagonal"] = report.diagonal;
    j["wall_times"] = report.wall_times;
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw data_error("cannot open '" + path + "' for writing");
    out << j.dump(2) << "\n";
}

RunReport read_metrics_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw data_error("cannot open metrics file '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw data_error("metrics file '" + path + "' is not valid JSON: " + e.what());
    }
    RunReport out;
    out.method = require_field(j, path, "method").get<std::string>();
    out.seed = require_field(j, path, "seed").get<std::uint64_t>();
    out.k = require_field(j, path, "k").get<std::size_t>();
    out.p = require_field(j, path, "p").get<double>();
    out.mode = require_field(j, path, "mode").get<std::string>();
    out.t = require_field(j, path, "t").get<std::size_t>();
    out.matrix = require_field(j, path, "matrix").get<std::vector<std::vector<double>>>();
    out.aa = require_field(j, path, "aa").get<double>();
    out.af = require_field(j, path, "af").get<double>();
    out.diagonal = require_field(j, path, "diagonal").get<std::vector<double>>();
    out.wall_times = require_field(j, path, "wall_times").get<std::vector<double>>();
    return out;
}

void write_report_csv(const std::string& path, std::vector<RunReport> rows) {
    std::sort(rows.begin(), rows.end(), [](const RunReport& a, const RunReport& b) {
        return std::tie(a.method, a.k, a.p, a.seed) < std::tie(b.method, b.k, b.p, b.seed);
    });
    std::size_t widest = 0;
    for (const auto& r : rows) widest = std::max(widest, r.diagonal.size());

    std::ofstream out(path, std::ios::trunc);
    if (!out) throw data_error("cannot open '" + path + "' for writing");
    out << "method,seed,k,p,mode,t,aa,af,train_seconds";
    for (std::size_t b = 1; b <= widest; ++b) out << ",diag_" << b;
    out << "\n";
    for (const auto& r : rows) {
        double seconds = 0.0;
        for (double s : r.wall_times) seconds += s;
        out << r.method << "," << r.seed << "," << r.k << "," << format_cell(r.p) << "," << r.mode
            << "," << r.t << "," << format_cell(r.aa) << "," << format_cell(r.af) << ","
            << format_cell(seconds);
        for (std::size_t b = 0; b < widest; ++b) {
            out << ",";
            if (b < r.diagonal.size()) out << format_cell(r.diagonal[b]);
        }
        out << "\n";
    }
}

void write_theorem_report(const std::string& path, const MixtureSpec& spec,
                          const TheoremResult& result, const std::vector<SweepPoint>& sweep) {
    json j;
    j["spec"] = {{"dims", spec.dims},
                 {"separation", spec.separation},
                 {"sigma", spec.sigma},
                 {"radius", spec.radius}};
    j["loss_pi"] = result.loss_pi;
    j["loss_dy"] = result.loss_dy;
    j["delta"] = result.delta;
    j["std_error"] = result.std_error;
    j["n"] = result.n;
    j["verdict"] = result.delta > 0.0 ? "holds" : "fails";
    if (!sweep.empty()) {
        json points = json::array();
        for (const auto& pt : sweep) {
            points.push_back({{"sigma", pt.spec.sigma},
                              {"ratio", pt.spec.radius / pt.spec.sigma},
                              {"loss_pi", pt.result.loss_pi},
                              {"loss_dy", pt.result.loss_dy},
                              {"delta", pt.result.delta},
                              {"std_error", pt.result.std_error}});
        }
        j["sweep"] = points;
    }
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw data_error("cannot open '" + path + "' for writing");
    out << j.dump(2) << "\n";
}

}  // namespace dymoe
