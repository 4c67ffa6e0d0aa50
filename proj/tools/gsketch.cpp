#include <exception>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "gsketch/experiments.hpp"

namespace {

// config-file values fill in any flag the command line left untouched
void apply_config_file(gsketch::ExperimentConfig& cfg, const std::string& path,
                       const CLI::App& cmd, bool& seed_set, bool& out_set) {
    std::ifstream in(path);
    if (!in)
        throw std::invalid_argument("cannot open config file '" + path + "'");
    nlohmann::json j;
    in >> j;
    auto unset = [&](const std::string& flag) { return cmd.count(flag) == 0; };
    if (j.contains("seed") && unset("--seed")) {
        cfg.seed = j["seed"].get<std::uint64_t>();
        seed_set = true;
    }
    if (j.contains("trials") && unset("--trials")) cfg.trials = j["trials"].get<int>();
    if (j.contains("out") && unset("--out")) {
        cfg.out = j["out"].get<std::string>();
        out_set = true;
    }
    if (j.contains("n") && unset("--n")) cfg.n = j["n"].get<int>();
    if (j.contains("k_max") && unset("--k-max")) cfg.k_max = j["k_max"].get<int>();
    if (j.contains("p") && unset("--p")) cfg.p = j["p"].get<int>();
    if (j.contains("ell") && unset("--ell")) cfg.ell = j["ell"].get<double>();
    if (j.contains("nu") && unset("--nu")) cfg.nu = j["nu"].get<double>();
    if (j.contains("kernel") && unset("--kernel")) cfg.kernel = j["kernel"].get<std::string>();
    if (j.contains("cov") && unset("--cov")) cfg.cov = j["cov"].get<std::string>();
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"randomized low-rank sketching with designed Gaussian covariances"};
    app.require_subcommand(1);

    gsketch::ExperimentConfig cfg;
    std::string config_path;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--seed", cfg.seed, "RNG seed (required for every command)");
        cmd->add_option("--trials", cfg.trials, "trials / draws per configuration");
        cmd->add_option("--out", cfg.out, "output file path (required)");
        cmd->add_option("--n", cfg.n, "problem size / grid size (0 = command default)");
        cmd->add_option("--k-max", cfg.k_max, "largest sample count");
        cmd->add_option("--p", cfg.p, "oversampling parameter");
        cmd->add_option("--ell", cfg.ell, "squared-exponential length scale");
        cmd->add_option("--nu", cfg.nu, "power-law decay exponent");
        cmd->add_option("--kernel", cfg.kernel, "builtin kernel name or tabulated CSV path");
        cmd->add_option("--cov", cfg.cov, "covariance selector");
        cmd->add_option("--config", config_path, "JSON config file (flags win on conflict)");
        return cmd;
    };

    add_common(app.add_subcommand("matrix-prior", "matrix sketching ratio sweep"));
    add_common(app.add_subcommand("hs-convergence", "kernel-learning error sweep"));
    add_common(app.add_subcommand("gp-samples", "kernel slices and GP draws"));
    add_common(app.add_subcommand("bound-check", "Monte-Carlo bound report"));
    add_common(app.add_subcommand("kernel-learn", "one kernel-learning run"));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    CLI::App* active = app.get_subcommands().front();

    try {
        bool seed_set = active->count("--seed") > 0;
        bool out_set = active->count("--out") > 0;
        if (!config_path.empty())
            apply_config_file(cfg, config_path, *active, seed_set, out_set);
        if (!seed_set)
            throw std::invalid_argument("a seed is required (--seed or config file)");
        if (!out_set)
            throw std::invalid_argument("an output path is required (--out or config file)");
        cfg.command = active->get_name();

        if (cfg.command == "matrix-prior")
            gsketch::cmd_matrix_prior(cfg);
        else if (cfg.command == "hs-convergence")
            gsketch::cmd_hs_convergence(cfg);
        else if (cfg.command == "gp-samples")
            gsketch::cmd_gp_samples(cfg);
        else if (cfg.command == "bound-check")
            gsketch::cmd_bound_check(cfg);
        else
            gsketch::cmd_kernel_learn(cfg);
    } catch (const std::invalid_argument& e) {
        std::cerr << "gsketch: config error: " << e.what() << '\n';
        return 2;
    } catch (const std::out_of_range& e) {
        std::cerr << "gsketch: config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "gsketch: numerical failure: " << e.what() << '\n';
        return 3;
    }
    return 0;
}
