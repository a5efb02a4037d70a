// warp: model, resample, align and test time-warping functions from the
// command line. File formats are plain CSV/JSON; see README.md.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "warplib/fpca.hpp"
#include "warplib/generative.hpp"
#include "warplib/inference.hpp"
#include "warplib/io.hpp"
#include "warplib/registration.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace warplib;

namespace {

void ensure_dir(const std::string& dir) {
    if (!dir.empty()) fs::create_directories(dir);
}

void write_scalar_csv(const std::string& path, const std::string& header,
                      const std::vector<std::vector<double>>& rows) {
    std::ofstream f(path);
    f << header << '\n';
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i)
            f << (i ? "," : "") << format_double(row[i]);
        f << '\n';
    }
}

void emit_curves(const std::string& dir, const std::string& name,
                 const FunctionTable& table) {
    ensure_dir(dir);
    write_function_table((fs::path(dir) / name).string(), table);
}

void emit_scree(const std::string& dir, const FpcaModel& model) {
    ensure_dir(dir);
    std::vector<std::vector<double>> rows;
    double acc = 0.0;
    for (std::size_t i = 0; i < model.eigenpairs.size(); ++i) {
        acc += model.eigenpairs[i].first;
        rows.push_back({static_cast<double>(i + 1), model.eigenpairs[i].first,
                        model.total_variance > 0 ? acc / model.total_variance : 1.0});
    }
    write_scalar_csv((fs::path(dir) / "scree.csv").string(),
                     "component,eigenvalue,cumulative_fraction", rows);
}

void emit_score_histograms(const std::string& dir, const FpcaModel& model) {
    ensure_dir(dir);
    for (int k = 0; k < model.retained_m; ++k) {
        std::vector<std::vector<double>> rows;
        for (int i = 0; i < model.scores.rows(); ++i)
            rows.push_back({model.scores(i, k)});
        write_scalar_csv(
            (fs::path(dir) / ("scores_component" + std::to_string(k + 1) + ".csv"))
                .string(),
            "score", rows);
    }
}

void emit_model_curves(const std::string& dir, const FpcaModel& model) {
    ensure_dir(dir);
    FunctionTable table;
    table.grid = model.grid;
    table.names.push_back("mean");
    table.columns.push_back(model.mean.values);
    for (std::size_t k = 0; k < model.eigenpairs.size(); ++k) {
        table.names.push_back("eigenfunction" + std::to_string(k + 1));
        table.columns.push_back(model.eigenpairs[k].second.values);
    }
    write_function_table((fs::path(dir) / "mean_and_eigenfunctions.csv").string(), table);
}

PenaltyKernel parse_kernel(const std::string& spec, const Grid& grid) {
    auto colon = spec.find(':');
    if (colon == std::string::npos)
        throw InvalidArgument("kernel spec must look like iso:a, diag:r.csv, "
                              "block:a,b,c or matrix:H.csv");
    std::string kind = spec.substr(0, colon);
    std::string arg = spec.substr(colon + 1);
    if (kind == "iso") return make_isotropic_kernel(parse_double(arg, "kernel iso"));
    if (kind == "block") {
        auto cells = split_csv_line(arg);
        if (cells.size() != 3)
            throw InvalidArgument("block kernel needs block:a,b,c");
        return make_block_kernel(parse_double(cells[0], "block a"),
                                 parse_double(cells[1], "block b"),
                                 parse_double(cells[2], "block c"));
    }
    if (kind == "diag") {
        FunctionTable table = read_function_table(arg);
        require_same_grid(table.grid, grid, "diag kernel");
        return make_diagonal_kernel(RealFunction(table.grid, table.columns.at(0)));
    }
    if (kind == "matrix") {
        std::ifstream f(arg);
        if (!f) throw ParseError("cannot open '" + arg + "'");
        std::vector<std::vector<double>> rows;
        std::string line;
        while (std::getline(f, line)) {
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty()) continue;
            std::vector<double> row;
            for (const auto& cell : split_csv_line(line))
                row.push_back(parse_double(cell, arg));
            rows.push_back(std::move(row));
        }
        const int n = static_cast<int>(rows.size());
        if (n != grid.n_points())
            throw InvalidArgument("matrix kernel must be n_points x n_points for the "
                                  "input grid");
        Eigen::MatrixXd h(n, n);
        for (int i = 0; i < n; ++i) {
            if (static_cast<int>(rows[i].size()) != n)
                throw ParseError(arg + ": matrix is not square");
            for (int j = 0; j < n; ++j) h(i, j) = rows[i][j];
        }
        return make_full_matrix_kernel(std::move(h), grid.dt());
    }
    throw InvalidArgument("unknown kernel kind '" + kind + "'");
}

CutoffRule parse_cutoff(const std::string& spec) {
    auto colon = spec.find(':');
    if (colon == std::string::npos)
        throw InvalidArgument("cutoff must look like var:0.95 or count:20");
    std::string kind = spec.substr(0, colon);
    std::string arg = spec.substr(colon + 1);
    if (kind == "var") return CumulativeVariance{parse_double(arg, "cutoff var")};
    if (kind == "count") return FixedCount{static_cast<int>(parse_double(arg, "cutoff count"))};
    if (kind == "floor") return EigenvalueFloor{parse_double(arg, "cutoff floor")};
    throw InvalidArgument("unknown cutoff kind '" + kind + "'");
}

struct ClassMetrics {
    int tp, fp, fn, tn;
    double precision, sensitivity, specificity, accuracy, f_measure;
};

ClassMetrics metrics_for(int tp, int fp, int fn, int tn) {
    ClassMetrics m{tp, fp, fn, tn, 0, 0, 0, 0, 0};
    m.precision = tp + fp > 0 ? static_cast<double>(tp) / (tp + fp) : 0.0;
    m.sensitivity = tp + fn > 0 ? static_cast<double>(tp) / (tp + fn) : 0.0;
    m.specificity = tn + fp > 0 ? static_cast<double>(tn) / (tn + fp) : 0.0;
    m.accuracy = static_cast<double>(tp + tn) / (tp + fp + fn + tn);
    m.f_measure = m.precision + m.sensitivity > 0
                      ? 2.0 * m.precision * m.sensitivity / (m.precision + m.sensitivity)
                      : 0.0;
    return m;
}

json metrics_json(const std::string& label, const ClassMetrics& m) {
    return json{{"positive_class", label}, {"tp", m.tp},           {"fp", m.fp},
                {"fn", m.fn},              {"tn", m.tn},           {"precision", m.precision},
                {"sensitivity", m.sensitivity}, {"specificity", m.specificity},
                {"accuracy", m.accuracy},  {"f_measure", m.f_measure}};
}

int run(int argc, char** argv) {
    CLI::App app{"time-warping function modeling toolkit"};
    app.require_subcommand(1);

    // ---- simulate ----
    auto* simulate = app.add_subcommand("simulate", "draw warpings from a scenario");
    std::string sim_scenario = "a";
    int sim_count = 10, sim_grid = 1001, sim_m = 20;
    std::uint64_t sim_seed = 0;
    std::string sim_out, sim_plot;
    simulate->add_option("--scenario", sim_scenario, "scenario a..e")->required();
    simulate->add_option("--count", sim_count, "number of draws")->required();
    simulate->add_option("--seed", sim_seed, "random seed")->required();
    simulate->add_option("--out", sim_out, "output FunctionTable CSV")->required();
    simulate->add_option("--grid", sim_grid, "grid points (default 1001)");
    simulate->add_option("--m", sim_m, "truncation length (default 20)");
    simulate->add_option("--plot-data", sim_plot, "directory for plot series");

    // ---- fit ----
    auto* fit = app.add_subcommand("fit", "fit an fPCA model to warpings");
    std::string fit_in, fit_cutoff = "var:0.95", fit_coeff = "kde", fit_out, fit_plot;
    fit->add_option("--in", fit_in, "input FunctionTable CSV")->required();
    fit->add_option("--cutoff", fit_cutoff, "var:f | count:m | floor:d");
    fit->add_option("--coeff", fit_coeff, "kde | auto");
    fit->add_option("--out", fit_out, "output model JSON")->required();
    fit->add_option("--plot-data", fit_plot, "directory for plot series");

    // ---- resample ----
    auto* resample = app.add_subcommand("resample", "draw new warpings from a model");
    std::string rs_model, rs_out, rs_plot;
    int rs_count = 0;
    std::uint64_t rs_seed = 0;
    resample->add_option("--model", rs_model, "model JSON")->required();
    resample->add_option("--count", rs_count, "number of draws")->required();
    resample->add_option("--seed", rs_seed, "random seed")->required();
    resample->add_option("--out", rs_out, "output FunctionTable CSV")->required();
    resample->add_option("--plot-data", rs_plot, "directory for plot series");

    // ---- scores ----
    auto* scores = app.add_subcommand("scores", "fPCA scores of warpings under a model");
    std::string sc_model, sc_in, sc_out, sc_plot;
    scores->add_option("--model", sc_model, "model JSON")->required();
    scores->add_option("--in", sc_in, "input FunctionTable CSV")->required();
    scores->add_option("--out", sc_out, "output CSV")->required();
    scores->add_option("--plot-data", sc_plot, "directory for plot series");

    // ---- align ----
    auto* align_cmd = app.add_subcommand("align", "penalized alignment of f2 onto f1");
    std::string al_f1, al_f2, al_kernel = "iso:1", al_out, al_plot;
    double al_lambda = 0.0;
    bool al_oracle = false;
    align_cmd->add_option("--f1", al_f1, "target function CSV")->required();
    align_cmd->add_option("--f2", al_f2, "function to warp CSV")->required();
    align_cmd->add_option("--kernel", al_kernel, "iso:a | diag:r.csv | block:a,b,c | matrix:H.csv");
    align_cmd->add_option("--lambda", al_lambda, "penalty weight");
    align_cmd->add_option("--out", al_out, "output warping CSV")->required();
    align_cmd->add_flag("--oracle-dp", al_oracle, "also emit the DP warping");
    align_cmd->add_option("--plot-data", al_plot, "directory for plot series");

    // ---- anova ----
    auto* anova = app.add_subcommand("anova", "bootstrap fANOVA across groups");
    std::vector<std::string> an_groups;
    int an_boot = 10000;
    std::uint64_t an_seed = 0;
    std::string an_out, an_plot;
    anova->add_option("--groups", an_groups, "two or more group CSVs")->required();
    anova->add_option("--boot", an_boot, "bootstrap replicates");
    anova->add_option("--seed", an_seed, "random seed")->required();
    anova->add_option("--out", an_out, "output JSON")->required();
    anova->add_option("--plot-data", an_plot, "directory for plot series");

    // ---- classify ----
    auto* classify = app.add_subcommand("classify", "logistic classification on warpings");
    std::string cl_in, cl_labels, cl_out, cl_plot;
    int cl_dim = 2;
    classify->add_option("--in", cl_in, "input FunctionTable CSV")->required();
    classify->add_option("--labels", cl_labels, "name,label CSV")->required();
    classify->add_option("--dim", cl_dim, "number of fPCA components");
    classify->add_option("--out", cl_out, "output report JSON")->required();
    classify->add_option("--plot-data", cl_plot, "directory for plot series");

    // ---- growth-prep ----
    auto* growth = app.add_subcommand("growth-prep", "turn growth curves into warpings");
    std::string gr_in, gr_labels, gr_out, gr_plot;
    int gr_grid = 1001;
    growth->add_option("--in", gr_in, "growth CSV (age column + subjects)")->required();
    growth->add_option("--labels", gr_labels, "name,label CSV");
    growth->add_option("--grid", gr_grid, "grid points (default 1001)");
    growth->add_option("--out", gr_out, "output FunctionTable CSV")->required();
    growth->add_option("--plot-data", gr_plot, "directory for plot series");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help and friends
        std::cerr << json{{"code", "UsageError"},
                          {"message", e.what()},
                          {"hint", "run with --help for the accepted flags"}}
                         .dump()
                  << '\n';
        return 1;
    }

    if (simulate->parsed()) {
        if (sim_scenario.size() != 1)
            throw InvalidArgument("scenario must be a single letter a..e");
        GenerativeSpec spec = scenario_spec(sim_scenario[0], Grid(sim_grid), sim_m);
        std::vector<WarpingFunction> draws;
        std::vector<std::vector<double>> clrs;
        for (int i = 0; i < sim_count; ++i) {
            ClrFunction x = sample_clr(spec, sim_seed + i);
            clrs.push_back(x.values);
            draws.push_back(clr_inverse(x));
        }
        write_function_table(sim_out, warpings_to_table(draws, "g"));
        if (!sim_plot.empty()) {
            emit_curves(sim_plot, "warpings.csv", warpings_to_table(draws, "g"));
            FunctionTable h;
            h.grid = Grid(sim_grid);
            for (std::size_t i = 0; i < clrs.size(); ++i) {
                h.names.push_back("h" + std::to_string(i + 1));
                h.columns.push_back(clrs[i]);
            }
            emit_curves(sim_plot, "clr_processes.csv", h);
        }
        return 0;
    }

    if (fit->parsed()) {
        FunctionTable table = read_function_table(fit_in);
        std::vector<WarpingFunction> warpings = table_to_warpings(table);
        CoeffFit family;
        if (fit_coeff == "kde")
            family = CoeffFit::Kde;
        else if (fit_coeff == "auto")
            family = CoeffFit::Auto;
        else
            throw InvalidArgument("--coeff must be kde or auto");
        FpcaModel model = fpca_fit(warpings, parse_cutoff(fit_cutoff), {family});
        ModelProvenance prov{"fit --in " + fit_in + " --cutoff " + fit_cutoff +
                                 " --coeff " + fit_coeff,
                             0, provenance_timestamp()};
        save_model(fit_out, model, prov);
        if (!fit_plot.empty()) {
            emit_scree(fit_plot, model);
            emit_model_curves(fit_plot, model);
            emit_score_histograms(fit_plot, model);
        }
        return 0;
    }

    if (resample->parsed()) {
        FpcaModel model = load_model(rs_model);
        std::vector<WarpingFunction> draws = fpca_resample(model, rs_count, rs_seed);
        write_function_table(rs_out, warpings_to_table(draws, "g"));
        if (!rs_plot.empty())
            emit_curves(rs_plot, "resampled_warpings.csv", warpings_to_table(draws, "g"));
        return 0;
    }

    if (scores->parsed()) {
        FpcaModel model = load_model(sc_model);
        FunctionTable table = read_function_table(sc_in);
        std::vector<WarpingFunction> warpings = table_to_warpings(table);
        std::ofstream f(sc_out);
        if (!f) throw ParseError("cannot open '" + sc_out + "' for writing");
        f << "name";
        for (int k = 0; k < model.retained_m; ++k) f << ",z" << (k + 1);
        f << '\n';
        for (std::size_t i = 0; i < warpings.size(); ++i) {
            f << table.names[i];
            for (double z : fpca_scores(model, warpings[i])) f << ',' << format_double(z);
            f << '\n';
        }
        if (!sc_plot.empty()) {
            ensure_dir(sc_plot);
            fs::copy_file(sc_out, fs::path(sc_plot) / "scores_scatter.csv",
                          fs::copy_options::overwrite_existing);
        }
        return 0;
    }

    if (align_cmd->parsed()) {
        FunctionTable t1 = read_function_table(al_f1);
        FunctionTable t2 = read_function_table(al_f2);
        RealFunction f1(t1.grid, t1.columns.at(0));
        RealFunction f2(t2.grid, t2.columns.at(0));
        require_same_grid(f1.grid, f2.grid, "align");
        PenaltyKernel kernel = parse_kernel(al_kernel, f1.grid);
        AlignConfig config;
        config.lambda = al_lambda;
        config.max_iters = 20000;
        AlignResult res = align(f1, f2, kernel, config);
        if (!res.converged)
            std::cerr << json{{"code", "NoConvergence"},
                              {"message", "gradient tolerance not reached; emitting the "
                                          "best iterate"},
                              {"hint", "raise --lambda, lower the tolerance, or accept "
                                       "the best iterate"}}
                             .dump()
                      << '\n';

        FunctionTable out;
        out.grid = f1.grid;
        out.names = {"gamma"};
        out.columns = {res.warping.values};
        if (al_oracle) {
            WarpingFunction dp = align_dp(f1, f2);
            out.names.push_back("gamma_dp");
            out.columns.push_back(dp.values);
        }
        write_function_table(al_out, out);
        if (!al_plot.empty()) {
            ensure_dir(al_plot);
            FunctionTable aligned;
            aligned.grid = f1.grid;
            aligned.names = {"f1", "f2", "f2_aligned"};
            std::vector<double> warped(f1.grid.n_points());
            for (int i = 0; i < f1.grid.n_points(); ++i)
                warped[i] = interp_linear(f2.values, res.warping.values[i]);
            aligned.columns = {f1.values, f2.values, warped};
            emit_curves(al_plot, "alignment.csv", aligned);
            emit_curves(al_plot, "warpings.csv", out);
            std::vector<std::vector<double>> rows;
            for (std::size_t i = 0; i < res.trace.size(); ++i)
                rows.push_back({static_cast<double>(i), res.trace[i]});
            write_scalar_csv((fs::path(al_plot) / "loss_trace.csv").string(),
                             "iteration,loss", rows);
        }
        return 0;
    }

    if (anova->parsed()) {
        if (an_groups.size() < 2)
            throw InvalidArgument("anova needs at least two --groups files");
        std::vector<std::vector<WarpingFunction>> groups;
        for (const auto& path : an_groups)
            groups.push_back(table_to_warpings(read_function_table(path)));
        AnovaResult res = fanova_test(groups, an_boot, an_seed);
        json out{{"l2_stat", res.l2_stat}, {"f_stat", res.f_stat},
                 {"p_l2", res.p_l2},       {"p_f", res.p_f},
                 {"n_boot", res.n_boot},   {"seed", res.seed}};
        std::ofstream f(an_out);
        if (!f) throw ParseError("cannot open '" + an_out + "' for writing");
        f << out.dump(2) << '\n';
        if (!an_plot.empty()) {
            ensure_dir(an_plot);
            FunctionTable means;
            means.grid = groups[0][0].grid;
            for (std::size_t g = 0; g < groups.size(); ++g) {
                means.names.push_back("group" + std::to_string(g + 1) + "_mean");
                means.columns.push_back(warp_mean(groups[g]).values);
            }
            emit_curves(an_plot, "group_means.csv", means);
        }
        return 0;
    }

    if (classify->parsed()) {
        FunctionTable table = read_function_table(cl_in);
        std::vector<WarpingFunction> warpings = table_to_warpings(table);
        std::map<std::string, std::string> labels = read_labels_csv(cl_labels);
        std::vector<std::string> classes;
        std::vector<int> z(warpings.size());
        for (std::size_t i = 0; i < warpings.size(); ++i) {
            auto it = labels.find(table.names[i]);
            if (it == labels.end())
                throw ParseError("no label for column '" + table.names[i] + "'");
            auto pos = std::find(classes.begin(), classes.end(), it->second);
            if (pos == classes.end()) {
                classes.push_back(it->second);
                pos = classes.end() - 1;
            }
            z[i] = static_cast<int>(pos - classes.begin());
        }
        if (classes.size() != 2)
            throw InvalidArgument("classify needs exactly two distinct labels, got " +
                                  std::to_string(classes.size()));
        // class index 1 is the logistic "positive" class; order by name for
        // deterministic reports
        if (classes[0] > classes[1]) {
            std::swap(classes[0], classes[1]);
            for (int& v : z) v = 1 - v;
        }
        FunctionalRegressionModel model = fit_logistic(warpings, z, cl_dim);
        int tp = 0, fp = 0, fn = 0, tn = 0;
        std::vector<int> predicted(warpings.size());
        for (std::size_t i = 0; i < warpings.size(); ++i) {
            int hat = predict(model, warpings[i]) > 0.5 ? 1 : 0;
            predicted[i] = hat;
            if (hat == 1 && z[i] == 1) ++tp;
            if (hat == 1 && z[i] == 0) ++fp;
            if (hat == 0 && z[i] == 1) ++fn;
            if (hat == 0 && z[i] == 0) ++tn;
        }
        json report;
        report["classes"] = {{"negative", classes[0]}, {"positive", classes[1]}};
        report["basis_dim"] = cl_dim;
        report["converged"] = model.converged;
        report["separation_flag"] = model.separation_flag;
        report["confusion_matrix"] = {
            {"predicted_positive", {{"actual_positive", tp}, {"actual_negative", fp}}},
            {"predicted_negative", {{"actual_positive", fn}, {"actual_negative", tn}}}};
        report["per_class"] = json::array(
            {metrics_json(classes[1], metrics_for(tp, fp, fn, tn)),
             metrics_json(classes[0], metrics_for(tn, fn, fp, tp))});
        std::ofstream f(cl_out);
        if (!f) throw ParseError("cannot open '" + cl_out + "' for writing");
        f << report.dump(2) << '\n';
        if (!cl_plot.empty()) {
            ensure_dir(cl_plot);
            FpcaModel pca = fpca_fit(warpings, FixedCount{cl_dim});
            std::vector<std::vector<double>> rows;
            for (std::size_t i = 0; i < warpings.size(); ++i) {
                std::vector<double> zrow = fpca_scores(pca, warpings[i]);
                std::vector<double> row{static_cast<double>(z[i]),
                                        static_cast<double>(predicted[i])};
                row.insert(row.end(), zrow.begin(), zrow.end());
                rows.push_back(std::move(row));
            }
            std::string header = "label,predicted";
            for (int k = 0; k < cl_dim; ++k) header += ",z" + std::to_string(k + 1);
            write_scalar_csv((fs::path(cl_plot) / "scores_scatter.csv").string(), header,
                             rows);
        }
        return 0;
    }

    if (growth->parsed()) {
        GrowthData data = read_growth_csv(gr_in);
        std::map<std::string, std::string> labels;
        if (!gr_labels.empty()) labels = read_labels_csv(gr_labels);
        std::vector<LabeledWarping> prepared = ingest_growth(data, labels, Grid(gr_grid));
        FunctionTable out;
        out.grid = Grid(gr_grid);
        for (const auto& lw : prepared) {
            out.names.push_back(lw.subject);
            out.columns.push_back(lw.warping.values);
        }
        write_function_table(gr_out, out);
        if (!gr_plot.empty()) {
            emit_curves(gr_plot, "growth_warpings.csv", out);
            std::vector<WarpingFunction> all;
            for (const auto& lw : prepared) all.push_back(lw.warping);
            FunctionTable mean;
            mean.grid = out.grid;
            mean.names = {"mean"};
            mean.columns = {warp_mean(all).values};
            emit_curves(gr_plot, "mean_warping.csv", mean);
        }
        return 0;
    }

    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const Error& e) {
        std::cerr << json{{"code", e.code()}, {"message", e.what()}, {"hint", e.hint()}}
                         .dump()
                  << '\n';
        return static_cast<int>(e.kind());
    } catch (const std::exception& e) {
        std::cerr << json{{"code", "InternalError"}, {"message", e.what()}, {"hint", ""}}
                         .dump()
                  << '\n';
        return 3;
    }
}
