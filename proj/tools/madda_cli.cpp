// Command-line front end: scenario generation, single-episode runs, dataset
// collection, offline training/evaluation, parameter sweeps and the economic
// property probes. Exit codes: 0 success, 2 bad usage/validation, 1 runtime.

#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "madda/experiment.hpp"

using nlohmann::json;

namespace {

void write_file(const std::string& path, const std::string& body) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << body;
    if (!out) throw std::runtime_error("write failed for " + path);
}

json metrics_json(const madda::EpisodeMetrics& m) {
    return {{"social_welfare", m.social_welfare},
            {"exchange_cost_total", m.exchange_cost_total},
            {"winning_pairs", m.winning_pairs},
            {"matched_pairs", m.matched_pairs},
            {"trade_success_rate", m.trade_success_rate},
            {"rounds", m.rounds},
            {"episode_reward", m.episode_reward},
            {"charges_total", m.charges_total},
            {"payments_total", m.payments_total},
            {"min_winner_utility", m.min_winner_utility},
            {"agent", m.agent},
            {"reputation_enabled", m.reputation_enabled},
            {"seed", m.seed}};
}

std::vector<double> parse_levels(const std::string& csv) {
    std::vector<double> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        out.push_back(std::stod(item));
    }
    return out;
}

std::vector<std::string> parse_names(const std::string& csv) {
    std::vector<std::string> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Vehicular resource market simulator"};
    app.require_subcommand(1);

    // gen-scenario
    int gs_vus = 50, gs_rsus = 50;
    std::uint64_t gs_seed = 0;
    std::string gs_out;
    auto* gen = app.add_subcommand("gen-scenario", "Sample and save a market scenario");
    gen->add_option("--vus", gs_vus, "number of vehicular users")->required();
    gen->add_option("--rsus", gs_rsus, "number of roadside providers")->required();
    gen->add_option("--seed", gs_seed, "random seed")->required();
    gen->add_option("-o,--output", gs_out, "output file")->required();

    // run
    std::string run_scenario, run_agent = "fixed", run_model, run_trace, run_out;
    std::string run_dot;
    std::uint64_t run_seed = 0;
    bool run_no_rep = false;
    int run_warmup = 0;
    double run_target = 1.0;
    auto* run = app.add_subcommand("run", "Run one auction episode on a scenario");
    run->add_option("--scenario", run_scenario, "scenario file")->required();
    run->add_option("--agent", run_agent, "auctioneer agent")
        ->check(CLI::IsMember({"random", "fixed", "dt"}));
    run->add_option("--model", run_model, "model checkpoint for the dt agent");
    run->add_flag("--no-reputation", run_no_rep,
                  "pin every provider to full reputation");
    run->add_option("--trace", run_trace, "per-round JSONL trace file");
    run->add_option("--dump-graph", run_dot,
                    "write the admission graph and matching as DOT");
    run->add_option("--warmup", run_warmup,
                    "ledger-seeding replays before the measured episode");
    run->add_option("--target-return", run_target, "dt return conditioning");
    run->add_option("--seed", run_seed, "random seed")->required();
    run->add_option("-o,--output", run_out, "metrics output file")->required();

    // collect
    int col_episodes = 0, col_vus = 50, col_rsus = 50;
    std::string col_policy = "mixed", col_out;
    std::uint64_t col_seed = 0;
    auto* collect = app.add_subcommand("collect", "Collect an offline trajectory dataset");
    collect->add_option("--episodes", col_episodes, "episode count")->required();
    collect->add_option("--policy", col_policy, "behavior policy")
        ->check(CLI::IsMember({"random", "fixed", "mixed"}));
    collect->add_option("--vus", col_vus, "users per episode market");
    collect->add_option("--rsus", col_rsus, "providers per episode market");
    collect->add_option("--seed", col_seed, "random seed")->required();
    collect->add_option("-o,--output", col_out, "dataset file (JSONL)")->required();

    // train-dt
    std::string tr_data, tr_out;
    madda::TrainConfig tr_cfg;
    auto* train = app.add_subcommand("train-dt", "Train the transformer auctioneer offline");
    train->add_option("--data", tr_data, "trajectory dataset (JSONL)")->required();
    train->add_option("--context", tr_cfg.context_len, "context length in timesteps");
    train->add_option("--width", tr_cfg.embed_dim, "embedding width");
    train->add_option("--layers", tr_cfg.layers, "transformer blocks");
    train->add_option("--epochs", tr_cfg.epochs, "training epochs");
    train->add_option("--batch", tr_cfg.batch, "minibatch size");
    train->add_option("--lr", tr_cfg.learning_rate, "learning rate");
    train->add_option("--seed", tr_cfg.seed, "random seed")->required();
    train->add_option("-o,--output", tr_out, "model checkpoint file")->required();

    // eval
    std::string ev_model, ev_out;
    int ev_episodes = 30, ev_vus = 50, ev_rsus = 50;
    double ev_target = 1.0;
    std::uint64_t ev_seed = 0;
    auto* eval = app.add_subcommand("eval", "Evaluate a trained model over fresh episodes");
    eval->add_option("--model", ev_model, "model checkpoint")->required();
    eval->add_option("--episodes", ev_episodes, "episode count");
    eval->add_option("--target-return", ev_target, "return conditioning");
    eval->add_option("--vus", ev_vus, "users per episode market");
    eval->add_option("--rsus", ev_rsus, "providers per episode market");
    eval->add_option("--seed", ev_seed, "random seed")->required();
    eval->add_option("-o,--output", ev_out, "results file")->required();

    // sweep
    std::string sw_axis = "market-size", sw_levels, sw_agents = "fixed";
    std::string sw_model, sw_out, sw_format = "csv";
    int sw_reps = 1;
    std::uint64_t sw_seed = 0;
    auto* sw = app.add_subcommand("sweep", "Metric sweep over market parameters");
    sw->add_option("--axis", sw_axis, "sweep axis")
        ->check(CLI::IsMember({"market-size", "rsu-compute"}));
    sw->add_option("--levels", sw_levels, "comma-separated axis values")->required();
    sw->add_option("--agents", sw_agents, "comma-separated agent tags");
    sw->add_option("--reps", sw_reps, "episodes per cell");
    sw->add_option("--model", sw_model, "model checkpoint for the dt agent");
    sw->add_option("--seed", sw_seed, "random seed")->required();
    sw->add_option("-o,--output", sw_out, "output file")->required();
    sw->add_option("--format", sw_format, "output format")
        ->check(CLI::IsMember({"csv", "json"}));

    // probe-ic
    std::string pi_scenario, pi_out;
    int pi_grid = 100;
    auto* probe = app.add_subcommand(
        "probe-ic", "Utility-vs-declared-value curves for one winning pair");
    probe->add_option("--scenario", pi_scenario, "scenario file")->required();
    probe->add_option("--grid-steps", pi_grid, "grid resolution");
    probe->add_option("-o,--output", pi_out, "output file")->required();

    // reputation-demo
    int rd_honest = 10, rd_malicious = 10;
    std::uint64_t rd_seed = 0;
    std::string rd_out;
    auto* rep = app.add_subcommand(
        "reputation-demo", "Reputation trajectories for an honest-then-malicious seller");
    rep->add_option("--honest", rd_honest, "honest rounds");
    rep->add_option("--malicious", rd_malicious, "malicious rounds");
    rep->add_option("--seed", rd_seed, "random-weight scheme seed");
    rep->add_option("-o,--output", rd_out, "output file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (gen->parsed()) {
            madda::SamplingConfig cfg;
            auto errs = madda::validate_sampling(cfg);
            if (!errs.empty()) throw std::invalid_argument(errs.front());
            madda::Scenario sc =
                madda::generate_scenario(gs_vus, gs_rsus, cfg, gs_seed);
            madda::save_scenario(sc, gs_out);
        } else if (run->parsed()) {
            madda::Scenario sc = madda::load_scenario(run_scenario);
            auto errs = madda::validate_scenario(sc);
            if (!errs.empty()) throw std::invalid_argument(errs.front());
            madda::DtModel model = run_model.empty()
                                       ? madda::DtModel(madda::DtConfig{})
                                       : madda::DtModel::load(run_model);
            auto agent = madda::make_agent(
                run_agent, run_model.empty() ? nullptr : &model, run_target);

            madda::ReputationLedger ledger;
            madda::EpisodeOptions opt;
            opt.reputation_enabled = !run_no_rep;
            opt.ledger = &ledger;
            opt.record_feedback = true;
            for (int w = 0; w < run_warmup; ++w) {
                madda::EpisodeOptions warm = opt;
                warm.reputation_enabled = false;
                warm.time = w;
                madda::run_episode(sc, *agent, run_agent,
                                   madda::mix_seed(run_seed, w + 1), warm);
            }
            opt.time = run_warmup;
            std::ofstream trace;
            if (!run_trace.empty()) {
                trace.open(run_trace);
                if (!trace) throw std::runtime_error("cannot write " + run_trace);
                opt.trace = &trace;
            }
            auto m = madda::run_episode(sc, *agent, run_agent, run_seed, opt);
            if (!run_dot.empty()) {
                std::map<int, double> reps;
                for (const auto& p : sc.providers)
                    reps[p.id] = opt.reputation_enabled
                                     ? ledger.reputation(p.id, opt.time)
                                     : 1.0;
                auto graph = madda::build_graph(sc, reps);
                auto km = madda::km_match(graph);
                write_file(run_dot, madda::matching_to_dot(graph, km.matching));
            }
            write_file(run_out, metrics_json(m).dump(2) + "\n");
        } else if (collect->parsed()) {
            madda::BehaviorPolicy policy =
                col_policy == "random" ? madda::BehaviorPolicy::random
                : col_policy == "fixed" ? madda::BehaviorPolicy::fixed
                                        : madda::BehaviorPolicy::mixed;
            auto factory = madda::make_default_env_factory(col_vus, col_rsus);
            auto data =
                madda::collect_dataset(factory, policy, col_episodes, col_seed);
            madda::save_dataset(data, col_out);
        } else if (train->parsed()) {
            auto data = madda::load_dataset(tr_data);
            madda::TrainReport report;
            madda::DtModel model = madda::dt_train(data, tr_cfg, &report);
            model.save(tr_out);
            if (!report.epoch_losses.empty())
                std::cout << "final epoch loss "
                          << report.epoch_losses.back() << "\n";
        } else if (eval->parsed()) {
            madda::DtModel model = madda::DtModel::load(ev_model);
            madda::SeriesConfig cfg;
            cfg.n_users = ev_vus;
            cfg.n_providers = ev_rsus;
            cfg.agent = "dt";
            cfg.model = &model;
            cfg.target_return = ev_target;
            cfg.reputation_enabled = false;
            cfg.episodes = ev_episodes;
            cfg.seed = ev_seed;
            auto ms = madda::run_series(cfg);
            json eps = json::array();
            double mean = 0.0;
            for (const auto& m : ms) {
                eps.push_back(metrics_json(m));
                mean += m.episode_reward;
            }
            mean /= ms.empty() ? 1 : ms.size();
            json out = {{"mean_episode_reward", mean}, {"episodes", eps}};
            write_file(ev_out, out.dump(2) + "\n");
        } else if (sw->parsed()) {
            madda::SweepConfig cfg;
            cfg.axis = sw_axis;
            cfg.levels = parse_levels(sw_levels);
            cfg.agents = parse_names(sw_agents);
            cfg.reps = sw_reps;
            cfg.seed = sw_seed;
            madda::DtModel model{madda::DtConfig{}};
            if (!sw_model.empty()) {
                model = madda::DtModel::load(sw_model);
                cfg.model = &model;
            }
            for (const auto& a : cfg.agents)
                if (a == "dt" && !cfg.model)
                    throw std::invalid_argument(
                        "sweep: dt agent requires --model");
            auto result = madda::sweep(cfg);
            madda::emit_results(result, sw_out, sw_format);
        } else if (probe->parsed()) {
            madda::Scenario sc = madda::load_scenario(pi_scenario);
            auto curves = madda::probe_ir_ic(sc, pi_grid);
            write_file(pi_out, madda::probe_to_json(curves) + "\n");
        } else if (rep->parsed()) {
            auto series =
                madda::reputation_demo(rd_honest, rd_malicious, 0.1, rd_seed);
            write_file(rd_out, madda::reputation_series_to_json(series) + "\n");
        }
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
