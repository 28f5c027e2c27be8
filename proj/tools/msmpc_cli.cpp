// Command-line front end for the multi-step identification and multirate
// tube controller pipeline. Every subcommand is reproducible from a config
// file plus seeds; exit code 0 means all checks that apply to the command
// passed.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "msmpc/harness.hpp"

namespace {

using namespace msmpc;

ExperimentConfig load_config(const std::string& path) {
    if (path.empty()) return ExperimentConfig::defaults();
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open config " + path);
    json j;
    f >> j;
    return config_from_json(j);
}

json load_json(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open " + path);
    json j;
    f >> j;
    return j;
}

Dataset load_data(const std::string& path, const ExperimentConfig& cfg) {
    Dataset ds = read_dataset_csv(path);
    ds.v_bar = cfg.v_bar;
    ds.d_bar = cfg.d_bar;
    ds.Ts = cfg.Ts;
    return ds;
}

void print_audits(const Audits& a) {
    std::cout << to_json(a).dump(2) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"multi-step predictor identification and multirate tube MPC"};
    app.require_subcommand(1);

    std::string config_path, data_path, bank_path, out_path = "artifacts";
    std::uint64_t data_seed = 0, sim_seed = 0;
    int N_override = 0, periods_override = 0;

    auto add_common = [&](CLI::App* c) {
        c->add_option("--config", config_path, "config JSON file (defaults built in)");
        c->add_option("--data-seed", data_seed, "override dataset seed");
        c->add_option("--sim-seed", sim_seed, "override closed-loop noise seed");
        c->add_option("--N", N_override, "override dataset length");
        c->add_option("--periods", periods_override, "override closed-loop periods");
    };
    auto effective = [&]() {
        ExperimentConfig cfg = load_config(config_path);
        if (data_seed) cfg.data_seed = data_seed;
        if (sim_seed) cfg.sim_seed = sim_seed;
        if (N_override) cfg.N = N_override;
        if (periods_override) cfg.periods = periods_override;
        return cfg;
    };

    auto* gen = app.add_subcommand("generate-data", "simulate the plant and write a dataset");
    add_common(gen);
    gen->add_option("--out", out_path, "output CSV path")->required();

    auto* ident = app.add_subcommand("identify", "fit the predictor bank from a dataset");
    add_common(ident);
    ident->add_option("--data", data_path, "dataset CSV")->required();
    ident->add_option("--out", out_path, "output bank JSON")->required();

    auto* thm1 = app.add_subcommand("verify-thm1",
                                    "compare optimal multi-step fits against iterated one-step models");
    add_common(thm1);
    thm1->add_option("--data", data_path, "dataset CSV")->required();
    thm1->add_option("--out", out_path, "output CSV path");

    auto* syn = app.add_subcommand("synth", "synthesize the tube controller from a bank");
    add_common(syn);
    syn->add_option("--bank", bank_path, "bank JSON")->required();
    syn->add_option("--out", out_path, "output controller JSON")->required();

    auto* sim = app.add_subcommand("simulate", "run the audited closed loop from a bank");
    add_common(sim);
    sim->add_option("--bank", bank_path, "bank JSON")->required();
    sim->add_option("--out", out_path, "output directory");

    auto* cmp = app.add_subcommand("compare-bounds",
                                   "multi-step error bounds vs propagated one-step bounds");
    add_common(cmp);
    cmp->add_option("--bank", bank_path, "bank JSON")->required();
    cmp->add_option("--out", out_path, "output CSV path");

    auto* rep = app.add_subcommand("report", "summarize audits from an artifact directory");
    rep->add_option("--dir", out_path, "artifact directory")->required();

    auto* e2e = app.add_subcommand("end-to-end", "full pipeline with all artifacts");
    add_common(e2e);
    e2e->add_option("--out", out_path, "output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) {
            ExperimentConfig cfg = effective();
            Dataset ds = make_dataset(cfg, make_plant(cfg));
            write_dataset_csv(ds, out_path);
            std::cout << "wrote " << out_path << " (" << ds.u.size() << " samples)\n";
            return 0;
        }
        if (ident->parsed()) {
            ExperimentConfig cfg = effective();
            Dataset ds = load_data(data_path, cfg);
            auto id = identify_bank(ds, cfg.o, cfg.p_bar, cfg.alpha, cfg.gamma, cfg.d_bar);
            std::ofstream(out_path) << to_json(id.bank).dump(2) << '\n';
            std::cout << "wrote " << out_path << '\n';
            return 0;
        }
        if (thm1->parsed()) {
            ExperimentConfig cfg = effective();
            Dataset ds = load_data(data_path, cfg);
            auto id = identify_bank(ds, cfg.o, cfg.p_bar, cfg.alpha, cfg.gamma, cfg.d_bar);
            auto rows = verify_thm1(id);
            std::cout << "p,tau_multistep,tau_iterated,gap\n";
            for (const auto& r : rows)
                std::cout << r.p << ',' << r.tau_multistep << ',' << r.tau_iterated
                          << ',' << r.gap << '\n';
            if (!out_path.empty() && out_path != "artifacts") write_thm1_csv(rows, out_path);
            return 0;
        }
        if (syn->parsed()) {
            PredictorBank bank = bank_from_json(load_json(bank_path));
            ExperimentConfig cfg = effective();
            TubeController ctrl = synth(bank, cfg.mpc);
            std::ofstream(out_path) << to_json(ctrl).dump(2) << '\n';
            std::cout << "rho=" << ctrl.rho_cl << " norm=" << ctrl.norm_cl << '\n';
            return 0;
        }
        if (sim->parsed()) {
            ExperimentConfig cfg = effective();
            PredictorBank bank = bank_from_json(load_json(bank_path));
            TubeController ctrl = synth(bank, cfg.mpc);
            ArxPlant plant = make_plant(cfg);
            ClosedLoopInit init = make_excursion(plant, cfg);
            ClosedLoopTrace tr = run_closed_loop(ctrl, plant, init, cfg.periods, cfg.sim_seed);
            std::filesystem::create_directories(out_path);
            write_trace_csvs(tr, out_path + "/trace_steps.csv",
                             out_path + "/trace_periods.csv");
            std::cout << (tr.all_ok() ? "closed-loop audits passed\n"
                                      : "closed-loop audit FAILED: " + tr.failure_note + "\n");
            return tr.all_ok() ? 0 : 1;
        }
        if (cmp->parsed()) {
            PredictorBank bank = bank_from_json(load_json(bank_path));
            auto rows = compare_bounds(bank);
            std::cout << "p,w_multistep,w_iterated\n";
            for (const auto& r : rows)
                std::cout << r.p << ',' << r.w_multistep << ',' << r.w_iterated << '\n';
            if (!out_path.empty() && out_path != "artifacts") write_bounds_csv(rows, out_path);
            return 0;
        }
        if (rep->parsed()) {
            json a = load_json(out_path + "/audits.json");
            std::cout << a.dump(2) << '\n';
            return a.value("all_ok", false) ? 0 : 1;
        }
        if (e2e->parsed()) {
            ExperimentConfig cfg = effective();
            ExperimentResult r = run_experiment(cfg);
            write_artifacts(r, out_path);
            print_audits(r.audits);
            std::cout << (r.audits.all_ok() ? "all audits passed\n" : "audits FAILED\n");
            return r.audits.all_ok() ? 0 : 1;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 2;
}
