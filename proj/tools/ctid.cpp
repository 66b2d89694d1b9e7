// Command-line front end: ZOH simulation, additive/unfactored estimation,
// parsimony accounting, and the Monte Carlo benchmark driver.
//
// Exit codes: 0 ok, 2 usage or schema violation, 3 numeric overflow,
// 4 estimation failure, 5 benchmark produced no successful run.

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "ctid/ctid.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitSchema = 2;
constexpr int kExitOverflow = 3;
constexpr int kExitEstimation = 4;
constexpr int kExitEmptyBenchmark = 5;

nlohmann::json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open \"" + path + "\"");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw std::invalid_argument(path + ": " + e.what());
    }
    return j;
}

void save_json(const std::string& path, const nlohmann::json& j) {
    std::ofstream out(path);
    if (!out) throw std::invalid_argument("cannot write \"" + path + "\"");
    out << j.dump(2) << '\n';
}

Eigen::VectorXd to_vector(const std::vector<double>& v) {
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

double median(std::vector<double> v) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

struct EstimateConfig {
    std::uint64_t seed = 0;
    double perturb_fraction = 0.10;
    std::optional<nlohmann::json> perturb_model;
    double lssvf_lambda = 0.0;
    ctid::BcdConfig bcd;
    ctid::SrivcConfig srivc;
};

EstimateConfig parse_estimate_config(const std::optional<std::string>& path) {
    EstimateConfig cfg;
    if (!path) return cfg;
    const nlohmann::json j = load_json(*path);
    if (!j.is_object()) throw std::invalid_argument("config must be a JSON object");
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("lssvf_lambda")) cfg.lssvf_lambda = j.at("lssvf_lambda").get<double>();
    if (j.contains("perturb")) {
        const auto& p = j.at("perturb");
        if (p.contains("fraction")) cfg.perturb_fraction = p.at("fraction").get<double>();
        if (p.contains("model")) cfg.perturb_model = p.at("model");
        if (p.contains("model_file")) cfg.perturb_model = load_json(p.at("model_file").get<std::string>());
    }
    if (j.contains("bcd")) {
        const auto& b = j.at("bcd");
        if (b.contains("epsilon")) cfg.bcd.epsilon = b.at("epsilon").get<double>();
        if (b.contains("max_outer")) cfg.bcd.max_outer = b.at("max_outer").get<int>();
        if (b.contains("max_inner")) cfg.bcd.max_inner = b.at("max_inner").get<int>();
    }
    if (j.contains("srivc")) {
        const auto& s = j.at("srivc");
        if (s.contains("max_iters")) cfg.srivc.max_iters = s.at("max_iters").get<int>();
        if (s.contains("rel_tol")) cfg.srivc.rel_tol = s.at("rel_tol").get<double>();
        if (s.contains("cond_limit")) cfg.srivc.cond_limit = s.at("cond_limit").get<double>();
        if (s.contains("stabilize")) cfg.srivc.stabilize = s.at("stabilize").get<bool>();
    }
    cfg.bcd.srivc = cfg.srivc;
    return cfg;
}

/// Validates the time column: either an index column k or a seconds column t
/// with t[i] == i*h (or (i+1)*h) within 1e-9.
void check_time_column(const ctid::CsvTable& table, double h) {
    if (table.has_column("k")) return;
    if (!table.has_column("t"))
        throw std::invalid_argument("data CSV needs a time column \"k\" or \"t\"");
    const auto t = table.values("t");
    bool zero_based = true, one_based = true;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (std::abs(t[i] - static_cast<double>(i) * h) > 1e-9) zero_based = false;
        if (std::abs(t[i] - static_cast<double>(i + 1) * h) > 1e-9) one_based = false;
    }
    if (!zero_based && !one_based)
        throw std::invalid_argument("column \"t\" is not uniformly sampled at the given h");
}

int cmd_simulate(const std::string& model_path, const std::string& input_path, double h,
                 double noise_var, std::uint64_t seed, const std::string& out_path) {
    const ctid::ModelDocument doc = ctid::parse_model(load_json(model_path));
    const ctid::CsvTable table = ctid::read_csv(input_path);
    const Eigen::VectorXd u = to_vector(table.values("u"));
    if (u.size() == 0) throw std::invalid_argument("input CSV holds no samples");
    if (noise_var < 0.0) throw std::invalid_argument("--noise-var must be non-negative");

    const Eigen::VectorXd x = ctid::simulate_additive(doc.model, u, h);
    Eigen::VectorXd y = x;
    if (noise_var > 0.0) {
        ctid::Rng rng(seed);
        const double sd = std::sqrt(noise_var);
        for (Eigen::Index k = 0; k < y.size(); ++k) y(k) += sd * rng.normal();
    }

    std::ofstream out(out_path);
    if (!out) throw std::invalid_argument("cannot write \"" + out_path + "\"");
    out << "k,u,x,y\n";
    for (Eigen::Index k = 0; k < u.size(); ++k)
        out << k << ',' << ctid::format_double(u(k)) << ',' << ctid::format_double(x(k)) << ','
            << ctid::format_double(y(k)) << '\n';
    return kExitOk;
}

nlohmann::json trace_to_json(const ctid::SrivcTrace& trace, const ctid::TransferFunction& est) {
    nlohmann::json j;
    j["model"] = ctid::to_json(ctid::AdditiveModel({est}));
    j["status"] = ctid::to_string(trace.status);
    j["iters"] = trace.iterations();
    j["costs"] = trace.costs;
    j["optimality_norms"] = trace.optimality_norms;
    j["conditions"] = trace.conditions;
    return j;
}

int cmd_estimate(const std::string& data_path, double h, const std::string& structure_path,
                 const std::string& method, const std::string& init,
                 const std::optional<std::string>& config_path, const std::string& out_path) {
    const EstimateConfig cfg = parse_estimate_config(config_path);
    const ctid::StructureSpec structure = ctid::parse_structure(load_json(structure_path));
    const ctid::CsvTable table = ctid::read_csv(data_path);
    check_time_column(table, h);
    const Eigen::VectorXd u = to_vector(table.values("u"));
    const Eigen::VectorXd y = to_vector(table.values("y"));

    const int n = structure.total_order();
    const int m = n - structure.min_relative_degree();
    // Without prior knowledge of the dominant natural frequency, place the
    // state-variable filter a decade below Nyquist; override via the config.
    double lambda = cfg.lssvf_lambda;
    if (lambda <= 0.0) lambda = 0.1 * std::numbers::pi / h;

    auto additive_init = [&]() -> ctid::AdditiveModel {
        if (init == "perturb") {
            if (!cfg.perturb_model)
                throw std::invalid_argument(
                    "--init perturb needs a reference model in the config (perturb.model or "
                    "perturb.model_file)");
            const ctid::ModelDocument ref = ctid::parse_model(*cfg.perturb_model);
            ctid::Rng rng(cfg.seed);
            return ctid::detail::perturb_truth(ref.model, cfg.perturb_fraction, rng);
        }
        if (init == "lssvf") {
            const ctid::ThetaVector t0 = ctid::lssvf_estimate(y, u, h, n, m, lambda);
            const ctid::TransferFunction tf0 =
                ctid::reflect_unstable(ctid::unpack_theta(t0, n, m));
            if (structure.blocks() == 1) return ctid::AdditiveModel({tf0}, structure);
            return ctid::partial_fractions(tf0, structure);
        }
        if (init == "unfactored")
            return ctid::initialize_from_unfactored(y, u, h, structure, lambda, cfg.srivc);
        // anything else: path to a model file
        const ctid::ModelDocument doc = ctid::parse_model(load_json(init));
        return doc.model;
    };

    nlohmann::json out_json;
    double final_cost = 0.0;
    Eigen::VectorXd yhat;

    if (method == "bcd") {
        const ctid::AdditiveModel init_model = additive_init();
        const ctid::BcdResult res = ctid::bcd_fit(y, u, h, structure, init_model, cfg.bcd);
        out_json["model"] = ctid::to_json(res.model);
        out_json["cost_trace"] = res.cost_trace;
        out_json["outer_iters"] = res.outer_iters_used;
        nlohmann::json acc = nlohmann::json::array();
        for (const auto& sweep : res.accepted) {
            nlohmann::json row = nlohmann::json::array();
            for (bool b : sweep) row.push_back(b);
            acc.push_back(std::move(row));
        }
        out_json["accepted"] = std::move(acc);
        final_cost = res.final_cost();
        yhat = ctid::simulate_additive(res.model, u, h);
    } else if (method == "srivc") {
        ctid::ThetaVector theta0;
        if (init == "lssvf" || init == "unfactored") {
            theta0 = ctid::lssvf_estimate(y, u, h, n, m, lambda);
            theta0 = ctid::pack_theta(ctid::reflect_unstable(ctid::unpack_theta(theta0, n, m)), n, m);
        } else {
            theta0 = ctid::pack_theta(ctid::additive_to_unfactored(additive_init()), n, m);
        }
        const ctid::SrivcTrace trace = ctid::srivc_full(y, u, h, n, m, theta0, cfg.srivc);
        if (trace.empty())
            throw ctid::SingularMatrixError(std::numeric_limits<double>::infinity(),
                                            "estimation failed: " +
                                                std::string(ctid::to_string(trace.status)) +
                                                " before the first iterate");
        const ctid::TransferFunction est = trace.final_tf();
        out_json = trace_to_json(trace, est);
        final_cost = ctid::cost_vn(ctid::AdditiveModel({est}), y, u, h);
        yhat = ctid::simulate_zoh(est, u, h);
    } else if (method == "lssvf") {
        const ctid::ThetaVector theta = ctid::lssvf_estimate(y, u, h, n, m, lambda);
        const ctid::TransferFunction est = ctid::unpack_theta(theta, n, m);
        out_json["model"] = ctid::to_json(ctid::AdditiveModel({est}));
        final_cost = ctid::cost_vn(ctid::AdditiveModel({est}), y, u, h);
        yhat = ctid::simulate_zoh(est, u, h);
    } else {
        throw std::invalid_argument("unknown method \"" + method + "\"");
    }

    save_json(out_path, out_json);
    std::cout << "V_N = " << ctid::format_double(final_cost)
              << "\nfit = " << ctid::format_double(ctid::fit_metric(yhat, y)) << "\n";
    return kExitOk;
}

int cmd_parsimony(const std::string& structure_path) {
    const ctid::StructureSpec structure = ctid::parse_structure(load_json(structure_path));
    const ctid::ParsimonyReport rep = ctid::parsimony_excess(structure);
    std::cout << "blocks (K) = " << rep.blocks << "\nrelative degrees =";
    for (int r : rep.relative_degrees) std::cout << ' ' << r;
    std::cout << "\nminimal relative degree (r) = " << rep.min_relative_degree
              << "\nadditive parameters = " << rep.additive_parameters
              << "\nunfactored parameters = " << rep.unfactored_parameters
              << "\nexcess = " << rep.excess << "\n";
    return kExitOk;
}

int benchmark_threads(int runs) {
    const char* env = std::getenv("CTID_THREADS");
    int threads = static_cast<int>(std::thread::hardware_concurrency());
    if (threads < 1) threads = 1;
    if (env != nullptr) {
        try {
            std::size_t used = 0;
            const int parsed = std::stoi(env, &used);
            if (used != std::string(env).size() || parsed < 1) throw std::invalid_argument("");
            threads = parsed;
        } catch (const std::exception&) {
            throw std::invalid_argument("CTID_THREADS must be an integer >= 1");
        }
    }
    return std::min(threads, std::max(1, runs));
}

int cmd_benchmark(int which, std::optional<int> runs, std::optional<int> n,
                  std::optional<std::uint64_t> seed, const std::string& out_dir) {
    ctid::ExperimentConfig cfg = ctid::case_config(which);
    if (runs) cfg.runs = *runs;
    if (n) cfg.N = *n;
    if (seed) cfg.seed = *seed;
    cfg.validate();

    std::filesystem::create_directories(out_dir);
    const int threads = benchmark_threads(cfg.runs);
    std::cout << "case " << which << ": " << cfg.runs << " runs, N = " << cfg.N
              << ", seed = " << cfg.seed << ", threads = " << threads << "\n";

    const ctid::ExperimentSummary summary = ctid::run_experiment(cfg, threads);

    const auto dir = std::filesystem::path(out_dir);
    ctid::write_summary_csv((dir / "summary.csv").string(), summary);
    ctid::write_mse_csv((dir / "mse.csv").string(), summary);
    save_json((dir / "config-echo.json").string(), ctid::config_to_json(cfg));

    int successes = 0;
    for (const auto& method : summary.methods) {
        std::vector<double> fits;
        for (const auto& rec : summary.records)
            for (const auto& mr : rec.methods)
                if (mr.method == method && mr.ok) fits.push_back(mr.fit);
        successes += static_cast<int>(fits.size());
        std::cout << method << ": " << fits.size() << "/" << cfg.runs
                  << " runs ok, median fit = " << median(fits) << "\n";
    }
    if (successes == 0) {
        std::cerr << "no run produced a result\n";
        return kExitEmptyBenchmark;
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"additive continuous-time system identification"};
    app.require_subcommand(1);

    auto* sim = app.add_subcommand("simulate", "simulate a model on a sampled input");
    std::string sim_model, sim_input, sim_out;
    double sim_h = 0.0, sim_noise = 0.0;
    std::uint64_t sim_seed = 0;
    sim->add_option("--model", sim_model, "model JSON file")->required();
    sim->add_option("--input", sim_input, "input CSV with a column u")->required();
    sim->add_option("--h", sim_h, "sampling period [s]")->required();
    sim->add_option("--noise-var", sim_noise, "output noise variance (default 0)");
    sim->add_option("--seed", sim_seed, "noise seed (default 0)");
    sim->add_option("--out", sim_out, "output CSV (k,u,x,y)")->required();

    auto* est = app.add_subcommand("estimate", "fit a model to input/output data");
    std::string est_data, est_structure, est_method, est_init = "lssvf", est_out;
    std::optional<std::string> est_config;
    double est_h = 0.0;
    est->add_option("--data", est_data, "data CSV with columns k (or t), u, y")->required();
    est->add_option("--h", est_h, "sampling period [s]")->required();
    est->add_option("--structure", est_structure, "structure JSON ([[n_i, m_i], ...])")->required();
    est->add_option("--method", est_method, "bcd | srivc | lssvf")->required();
    est->add_option("--init", est_init, "perturb | lssvf | unfactored | model JSON path");
    est->add_option("--config", est_config, "optional config JSON");
    est->add_option("--out", est_out, "output JSON")->required();

    auto* par = app.add_subcommand("parsimony", "parameter accounting for a structure");
    std::string par_structure;
    par->add_option("--structure", par_structure, "structure JSON")->required();

    auto* bench = app.add_subcommand("benchmark", "Monte Carlo case-study driver");
    int bench_case = 0;
    std::optional<int> bench_runs, bench_n;
    std::optional<std::uint64_t> bench_seed;
    std::string bench_out;
    bench->add_option("--case", bench_case, "case study: 1 or 2")->required();
    bench->add_option("--runs", bench_runs, "number of Monte Carlo runs");
    bench->add_option("--n", bench_n, "samples per run");
    bench->add_option("--seed", bench_seed, "base seed");
    bench->add_option("--out", bench_out, "output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        app.exit(e);
        return kExitSchema;
    }

    try {
        if (sim->parsed()) return cmd_simulate(sim_model, sim_input, sim_h, sim_noise, sim_seed, sim_out);
        if (est->parsed())
            return cmd_estimate(est_data, est_h, est_structure, est_method, est_init, est_config, est_out);
        if (par->parsed()) return cmd_parsimony(par_structure);
        if (bench->parsed())
            return cmd_benchmark(bench_case, bench_runs, bench_n, bench_seed, bench_out);
    } catch (const ctid::SimulationOverflow& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitOverflow;
    } catch (const ctid::SingularMatrixError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitEstimation;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitSchema;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitEstimation;
    }
    return kExitSchema;
}
