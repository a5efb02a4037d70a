#pragma once

#include <charconv>
#include <cstdint>
#include <ctime>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "warplib/distribution.hpp"
#include "warplib/fpca.hpp"
#include "warplib/grid.hpp"
#include "warplib/interpolate.hpp"

namespace warplib {

// ---------------------------------------------------------------------------
// numeric formatting: shortest decimal that round-trips the 64-bit value
// ---------------------------------------------------------------------------

inline std::string format_double(double x) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& s, const std::string& context) {
    double out = 0.0;
    const char* begin = s.data();
    const char* end = s.data() + s.size();
    while (begin < end && (*begin == ' ' || *begin == '\t')) ++begin;
    auto res = std::from_chars(begin, end, out);
    if (res.ec != std::errc{} || res.ptr != end)
        throw ParseError(context + ": cannot parse number '" + s + "'");
    if (!std::isfinite(out))
        throw ParseError(context + ": non-finite number '" + s + "'");
    return out;
}

// ---------------------------------------------------------------------------
// FunctionTableFile: CSV with a strictly increasing "t" column followed by
// one column per function
// ---------------------------------------------------------------------------

struct FunctionTable {
    Grid grid;
    std::vector<std::string> names;
    std::vector<std::vector<double>> columns;  // one vector per function
};

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

inline void write_function_table(const std::string& path, const FunctionTable& table) {
    std::ofstream f(path);
    if (!f) throw ParseError("cannot open '" + path + "' for writing");
    f << "t";
    for (const auto& name : table.names) f << ',' << name;
    f << '\n';
    const int n = table.grid.n_points();
    for (int i = 0; i < n; ++i) {
        f << format_double(table.grid.point(i));
        for (const auto& col : table.columns) f << ',' << format_double(col[i]);
        f << '\n';
    }
}

inline FunctionTable read_function_table(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ParseError("cannot open '" + path + "'");
    std::string line;
    if (!std::getline(f, line)) throw ParseError(path + ": empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string> header = split_csv_line(line);
    if (header.empty() || header[0] != "t")
        throw ParseError(path + ": first column must be named 't'");
    const std::size_t cols = header.size();
    if (cols < 2) throw ParseError(path + ": no function columns");

    std::vector<double> t;
    std::vector<std::vector<double>> columns(cols - 1);
    std::size_t row = 1;
    while (std::getline(f, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> cells = split_csv_line(line);
        if (cells.size() != cols)
            throw ParseError(path + ": row " + std::to_string(row) + " has " +
                             std::to_string(cells.size()) + " cells, expected " +
                             std::to_string(cols));
        t.push_back(parse_double(cells[0], path));
        for (std::size_t c = 1; c < cols; ++c)
            columns[c - 1].push_back(parse_double(cells[c], path));
    }
    if (t.size() < 3) throw ParseError(path + ": needs at least 3 rows");
    for (std::size_t i = 0; i + 1 < t.size(); ++i)
        if (!(t[i + 1] > t[i]))
            throw ParseError(path + ": t column must be strictly increasing");

    const int n = static_cast<int>(t.size());
    const double dt = 1.0 / (n - 1);
    for (int i = 0; i < n; ++i)
        if (std::abs(t[i] - i * dt) > 1e-9)
            throw ParseError(path + ": t column must be the uniform grid i/(n-1)",
                             "resample the file onto a uniform grid first");

    FunctionTable table;
    table.grid = Grid(n);
    table.names.assign(header.begin() + 1, header.end());
    table.columns = std::move(columns);
    return table;
}

inline std::vector<WarpingFunction> table_to_warpings(const FunctionTable& table) {
    std::vector<WarpingFunction> out;
    out.reserve(table.columns.size());
    for (const auto& col : table.columns)
        out.push_back(make_warping_function(table.grid, col));
    return out;
}

inline FunctionTable warpings_to_table(const std::vector<WarpingFunction>& warpings,
                                       const std::string& prefix = "f") {
    FunctionTable table;
    if (warpings.empty()) throw InvalidArgument("warpings_to_table: empty input");
    table.grid = warpings[0].grid;
    for (std::size_t i = 0; i < warpings.size(); ++i) {
        table.names.push_back(prefix + std::to_string(i + 1));
        table.columns.push_back(warpings[i].values);
    }
    return table;
}

// ---------------------------------------------------------------------------
// ModelFile: JSON persistence of FpcaModel
// ---------------------------------------------------------------------------

inline nlohmann::json dist_to_json(const CoefficientDistribution& dist) {
    nlohmann::json j;
    std::visit(
        [&j](const auto& d) {
            using T = std::decay_t<decltype(d)>;
            if constexpr (std::is_same_v<T, NormalDist>) {
                j = {{"kind", "normal"}, {"params", {{"mean", d.mean}, {"sd", d.sd}}}};
            } else if constexpr (std::is_same_v<T, LaplaceDist>) {
                j = {{"kind", "laplace"},
                     {"params", {{"location", d.location}, {"scale", d.scale}}}};
            } else if constexpr (std::is_same_v<T, UniformDist>) {
                j = {{"kind", "uniform"}, {"params", {{"lo", d.lo}, {"hi", d.hi}}}};
            } else if constexpr (std::is_same_v<T, ExponentialDist>) {
                j = {{"kind", "exponential"},
                     {"params",
                      {{"rate", d.rate}, {"centered", d.centered}, {"negated", d.negated}}}};
            } else if constexpr (std::is_same_v<T, PiecewiseUniformDist>) {
                nlohmann::json
                    intervals = nlohmann::json::array();
                for (const auto& iv : d.intervals)
                    intervals.push_back({{"lo", iv.lo}, {"hi", iv.hi}, {"weight", iv.weight}});
                j = {{"kind", "piecewise_uniform"}, {"params", {{"intervals", intervals}}}};
            } else {
                const auto& k = static_cast<const KdeDist&>(d);
                j = {{"kind", "kde"}, {"samples", k.samples}, {"bandwidth", k.bandwidth}};
            }
        },
        dist);
    return j;
}

inline CoefficientDistribution dist_from_json(const nlohmann::json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "normal")
        return NormalDist{j.at("params").at("mean").get<double>(),
                          j.at("params").at("sd").get<double>()};
    if (kind == "laplace")
        return LaplaceDist{j.at("params").at("location").get<double>(),
                           j.at("params").at("scale").get<double>()};
    if (kind == "uniform")
        return UniformDist{j.at("params").at("lo").get<double>(),
                           j.at("params").at("hi").get<double>()};
    if (kind == "exponential")
        return ExponentialDist{j.at("params").at("rate").get<double>(),
                               j.at("params").at("centered").get<bool>(),
                               j.at("params").value("negated", false)};
    if (kind == "piecewise_uniform") {
        PiecewiseUniformDist d;
        for (const auto& iv : j.at("params").at("intervals"))
            d.intervals.push_back({iv.at("lo").get<double>(), iv.at("hi").get<double>(),
                                   iv.at("weight").get<double>()});
        return d;
    }
    if (kind == "kde")
        return KdeDist{j.at("samples").get<std::vector<double>>(),
                       j.at("bandwidth").get<double>()};
    throw ParseError("unknown coefficient distribution kind '" + kind + "'");
}

struct ModelProvenance {
    std::string command;
    std::uint64_t seed = 0;
    std::string timestamp;
};

inline std::string provenance_timestamp() {
    std::time_t now = 0;
    if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH"))
        now = static_cast<std::time_t>(std::strtoll(epoch, nullptr, 10));
    else
        now = std::time(nullptr);
    char buf[32];
    std::tm tm_utc{};
    gmtime_r(&now, &tm_utc);
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    return buf;
}

inline void save_model(const std::string& path, const FpcaModel& model,
                       const ModelProvenance& provenance) {
    nlohmann::json j;
    j["schema_version"] = 1;
    j["grid"] = {{"n_points", model.grid.n_points()}};
    j["mean"] = model.mean.values;
    nlohmann::json pairs = nlohmann::json::array();
    for (const auto& [lambda, e] : model.eigenpairs)
        pairs.push_back({{"lambda", lambda}, {"values", e.values}});
    j["eigenpairs"] = std::move(pairs);
    j["retained_m"] = model.retained_m;
    j["total_variance"] = model.total_variance;
    nlohmann::json models = nlohmann::json::array();
    for (const auto& d : model.coeff_models) models.push_back(dist_to_json(d));
    j["coeff_models"] = std::move(models);
    j["provenance"] = {{"command", provenance.command},
                       {"seed", provenance.seed},
                       {"timestamp", provenance.timestamp}};
    std::ofstream f(path);
    if (!f) throw ParseError("cannot open '" + path + "' for writing");
    f << j.dump(2) << '\n';
}

inline FpcaModel load_model(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ParseError("cannot open '" + path + "'");
    nlohmann::json j;
    try {
        f >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path + ": invalid JSON (" + e.what() + ")");
    }
    if (!j.contains("schema_version") || j["schema_version"].get<int>() != 1)
        throw ParseError(path + ": unsupported schema_version",
                         "this build reads schema_version 1");
    FpcaModel model;
    model.grid = Grid(j.at("grid").at("n_points").get<int>());
    model.mean = ClrFunction{model.grid, j.at("mean").get<std::vector<double>>()};
    for (const auto& pair : j.at("eigenpairs"))
        model.eigenpairs.emplace_back(
            pair.at("lambda").get<double>(),
            ClrFunction{model.grid, pair.at("values").get<std::vector<double>>()});
    model.retained_m = j.at("retained_m").get<int>();
    model.total_variance = j.value("total_variance", 0.0);
    for (const auto& d : j.at("coeff_models"))
        model.coeff_models.push_back(dist_from_json(d));
    if (static_cast<int>(model.eigenpairs.size()) != model.retained_m ||
        static_cast<int>(model.coeff_models.size()) != model.retained_m)
        throw ParseError(path + ": eigenpair/coefficient counts disagree with retained_m");
    return model;
}

// ---------------------------------------------------------------------------
// GrowthDataFile ingestion
// ---------------------------------------------------------------------------

struct GrowthData {
    std::vector<double> ages;
    std::vector<std::string> subjects;
    std::vector<std::vector<double>> heights;  // one vector per subject
};

inline GrowthData read_growth_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ParseError("cannot open '" + path + "'");
    std::string line;
    if (!std::getline(f, line)) throw ParseError(path + ": empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string> header = split_csv_line(line);
    if (header.empty() || header[0] != "age")
        throw ParseError(path + ": first column must be named 'age'");
    GrowthData data;
    data.subjects.assign(header.begin() + 1, header.end());
    data.heights.resize(data.subjects.size());
    std::size_t row = 1;
    while (std::getline(f, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> cells = split_csv_line(line);
        if (cells.size() != header.size())
            throw ParseError(path + ": row " + std::to_string(row) + " is ragged");
        data.ages.push_back(parse_double(cells[0], path));
        for (std::size_t c = 1; c < cells.size(); ++c) {
            double h = parse_double(cells[c], path);
            if (!(h > 0.0))
                throw ParseError(path + ": height must be positive at row " +
                                 std::to_string(row));
            data.heights[c - 1].push_back(h);
        }
    }
    for (std::size_t i = 0; i + 1 < data.ages.size(); ++i) {
        if (data.ages[i + 1] == data.ages[i])
            throw ParseError(path + ": duplicated age " + format_double(data.ages[i]),
                             "collapse duplicate measurement ages before ingestion");
        if (data.ages[i + 1] < data.ages[i])
            throw ParseError(path + ": ages must be ascending");
    }
    return data;
}

inline std::map<std::string, std::string> read_labels_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ParseError("cannot open '" + path + "'");
    std::map<std::string, std::string> labels;
    std::string line;
    bool first = true;
    while (std::getline(f, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> cells = split_csv_line(line);
        if (cells.size() != 2)
            throw ParseError(path + ": label rows must be 'name,label'");
        if (first && (cells[0] == "name" || cells[0] == "column")) {
            first = false;
            continue;  // optional header
        }
        first = false;
        labels[cells[0]] = cells[1];
    }
    if (labels.empty()) throw ParseError(path + ": no labels");
    return labels;
}

/// Rescale one growth curve (ages, heights) onto [0,1] x [0,1] and resample
/// it to the grid with a monotone cubic so the result is a warping function.
inline WarpingFunction growth_to_warping(const std::vector<double>& ages,
                                         const std::vector<double>& heights,
                                         const Grid& grid,
                                         const std::string& subject) {
    if (ages.size() < 4)
        throw NonMonotoneData(subject + ": needs >= 4 ages for the monotone cubic");
    const double a0 = ages.front(), a1 = ages.back();
    const double h0 = heights.front(), h1 = heights.back();
    if (!(h1 > h0))
        throw NonMonotoneData(subject + ": last height must exceed the first");
    std::vector<double> x(ages.size()), y(ages.size());
    for (std::size_t i = 0; i < ages.size(); ++i) {
        x[i] = (ages[i] - a0) / (a1 - a0);
        y[i] = (heights[i] - h0) / (h1 - h0);
    }
    for (std::size_t i = 0; i + 1 < y.size(); ++i)
        if (y[i + 1] < y[i] - 1e-6)
            throw NonMonotoneData(subject + ": rescaled heights decrease at age " +
                                  format_double(ages[i + 1]));
    // tiny decreases within tolerance are flattened before interpolation
    for (std::size_t i = 0; i + 1 < y.size(); ++i)
        if (y[i + 1] < y[i]) y[i + 1] = y[i];

    MonotoneCubic spline(std::move(x), std::move(y));
    const int n = grid.n_points();
    std::vector<double> values(n);
    for (int i = 0; i < n; ++i) values[i] = spline(grid.point(i));
    values.front() = 0.0;
    values.back() = 1.0;

    // enforce strict increase: monotone interpolation can be locally flat
    const double min_step = 10.0 * kDerivativeFloor * grid.dt();
    for (int i = 1; i < n; ++i)
        if (values[i] < values[i - 1] + min_step)
            values[i] = values[i - 1] + min_step;
    if (values[n - 1] > 1.0) {
        double scale = 1.0 / values[n - 1];
        for (int i = 1; i < n; ++i) values[i] *= scale;
    }
    values.back() = 1.0;
    return make_warping_function(grid, std::move(values));
}

struct LabeledWarping {
    WarpingFunction warping;
    std::string label;
    std::string subject;
};

inline std::vector<LabeledWarping> ingest_growth(
    const GrowthData& data, const std::map<std::string, std::string>& labels,
    const Grid& grid) {
    std::vector<LabeledWarping> out;
    out.reserve(data.subjects.size());
    for (std::size_t s = 0; s < data.subjects.size(); ++s) {
        std::string label;
        auto it = labels.find(data.subjects[s]);
        if (it != labels.end()) label = it->second;
        out.push_back({growth_to_warping(data.ages, data.heights[s], grid,
                                         data.subjects[s]),
                       label, data.subjects[s]});
    }
    return out;
}

}  // namespace warplib
