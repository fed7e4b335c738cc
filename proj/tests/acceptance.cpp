// End-to-end acceptance checks. Each numbered block prints exactly one
// PASS/FAIL line; the process exits nonzero if any block fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "madda/experiment.hpp"

using namespace madda;

namespace {

int failures = 0;

void report(int number, const std::string& what, bool ok, double seconds,
            const std::string& detail) {
    std::printf("%s  [%d] %s (%.1fs) %s\n", ok ? "PASS" : "FAIL", number,
                what.c_str(), seconds, detail.c_str());
    if (!ok) ++failures;
}

struct Timer {
    std::chrono::steady_clock::time_point start =
        std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                             start)
            .count();
    }
};

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

// ---- 1: economic properties over randomized episodes --------------------

void check_economics() {
    Timer timer;
    bool ok = true;
    std::string detail;
    DtModel untrained{DtConfig{}};
    const char* tags[3] = {"random", "fixed", "dt"};
    int episodes = 0;
    for (int i = 0; i < 200 && ok; ++i) {
        int size = 10 + (i * 7) % 41;  // market sizes 10..50
        std::uint64_t seed = mix_seed(1000, i);
        Scenario sc = generate_scenario(size, size, SamplingConfig{}, seed);
        std::map<int, double> reps;
        for (const auto& p : sc.providers) reps[p.id] = 1.0;
        auto km = km_match(build_graph(sc, reps));
        if (km.matching.pairs.empty()) continue;
        auto values = calibrated_values(sc);
        AuctionEnv env(km.matching, values.buyer, values.seller, sc.market);
        auto agent = make_agent(tags[i % 3], &untrained);
        std::mt19937_64 rng(seed);
        EnvState s = env.reset();
        agent->begin_episode(s);
        while (!env.done()) {
            int a = agent->act(s, rng);
            auto [next, r, d] = env.step(a);
            agent->on_transition(a, r, next);
            s = next;
        }
        Settlement st = settle(env.auction(), km.matching, sc.market.price_factor);
        double charges = 0, payments = 0;
        for (const auto& [id, c] : st.buyer_charges) charges += c;
        for (const auto& [id, p] : st.seller_payments) payments += p;
        if (charges != payments) {
            ok = false;
            detail = "budget imbalance at episode " + std::to_string(i);
        }
        if (st.buyer_charges.size() != st.seller_payments.size() ||
            st.winning_pairs.size() != st.buyer_charges.size()) {
            ok = false;
            detail = "winner-count parity broken at episode " + std::to_string(i);
        }
        for (const auto& [m, n] : st.winning_pairs) {
            if (st.buyer_utilities.at(m) < 0.0 || st.seller_utilities.at(n) < 0.0) {
                ok = false;
                detail = "negative winner utility at episode " + std::to_string(i);
            }
        }
        ++episodes;
    }
    double t = timer.seconds();
    if (ok && t >= 120.0) {
        ok = false;
        detail = "exceeded the 2-minute budget";
    }
    if (ok) detail = std::to_string(episodes) + " trading episodes, balance exact";
    report(1, "economic properties across agents and market sizes", ok, t, detail);
}

// ---- 2: assignment oracle equivalence -----------------------------------

void check_matching_oracle() {
    Timer timer;
    bool ok = true;
    std::string detail;
    std::mt19937_64 rng(4242);
    std::uniform_int_distribution<int> side(1, 7);
    std::uniform_real_distribution<double> weight(0.0, 100.0);
    std::uniform_real_distribution<double> keep(0.0, 1.0);
    for (int trial = 0; trial < 500 && ok; ++trial) {
        int nl = side(rng), nr = side(rng);
        double density = 0.3 + 0.7 * keep(rng);
        WeightedBipartiteGraph g;
        for (int i = 0; i < nl; ++i) g.left.push_back(i);
        for (int j = 0; j < nr; ++j) g.right.push_back(1000 + j);
        for (int i = 0; i < nl; ++i)
            for (int j = 0; j < nr; ++j)
                if (keep(rng) < density) g.add_edge(i, 1000 + j, weight(rng));
        auto km = km_match(g);
        auto bf = brute_force_match(g);
        double wmax = 1.0;
        for (const auto& row : km.padded_weights)
            for (double w : row) wmax = std::max(wmax, std::abs(w));
        double tol = 1e-9 * wmax;
        if (std::abs(km.matching.total_weight - bf.total_weight) > tol ||
            km.matching.pairs.size() != bf.pairs.size()) {
            ok = false;
            detail = "oracle mismatch at trial " + std::to_string(trial);
            break;
        }
        for (int i = 0; i < km.padded_size && ok; ++i) {
            for (int j = 0; j < km.padded_size; ++j) {
                if (km.left_labels[i] + km.right_labels[j] <
                    km.padded_weights[i][j] - tol) {
                    ok = false;
                    detail = "infeasible labels at trial " + std::to_string(trial);
                }
            }
            int j = km.padded_assignment[i];
            if (j < 0 || std::abs(km.left_labels[i] + km.right_labels[j] -
                                  km.padded_weights[i][j]) > tol) {
                ok = false;
                detail = "slack matched edge at trial " + std::to_string(trial);
            }
        }
    }
    double t = timer.seconds();
    if (ok && t >= 60.0) {
        ok = false;
        detail = "exceeded the 1-minute budget";
    }
    if (ok) detail = "500 graphs, exhaustive totals and dual certificates agree";
    report(2, "matching equals exhaustive search with valid duals", ok, t, detail);
}

// ---- 3: declared-value probe --------------------------------------------

void check_incentives() {
    Timer timer;
    bool ok = true;
    std::string detail;
    // 50x50 markets whose baseline run clears at least one trade
    const std::uint64_t seeds[10] = {1, 2, 3, 4, 6, 7, 8, 9, 10, 12};
    for (std::uint64_t seed : seeds) {
        Scenario sc = generate_scenario(50, 50, SamplingConfig{}, seed);
        IrIcProbe p = probe_ir_ic(sc, 100);
        double grid_step = p.buyer.declared[1] - p.buyer.declared[0];
        for (const UtilityCurve* c : {&p.buyer, &p.seller}) {
            double best = 0.0;
            std::size_t truth_idx = 0;
            double dist = 1e300;
            for (std::size_t i = 0; i < c->utility.size(); ++i) {
                if (c->utility[i] < 0.0) {
                    ok = false;
                    detail = "negative utility, market seed " + std::to_string(seed);
                }
                best = std::max(best, c->utility[i]);
                double d = std::abs(c->declared[i] - c->true_value);
                if (d < dist) {
                    dist = d;
                    truth_idx = i;
                }
            }
            if (c->utility[truth_idx] < best - 1e-9) {
                ok = false;
                detail = "truth not maximal, market seed " + std::to_string(seed);
            }
            if (std::abs(c->declared[c->argmax] - c->true_value) >
                grid_step + 1e-9) {
                ok = false;
                detail = "argmax off truth, market seed " + std::to_string(seed);
            }
        }
        if (!ok) break;
    }
    if (ok)
        detail = "10 markets, truthful bids maximize utility, all curves >= 0";
    report(3, "declared-value probe: truthfulness and nonnegative utility", ok,
           timer.seconds(), detail);
}

// ---- 4: reputation dynamics ---------------------------------------------

void check_reputation_dynamics() {
    Timer timer;
    bool ok = true;
    std::string detail;
    ReputationSeries s = reputation_demo(10, 10, 0.1, 0);
    for (int t = 1; t <= 10 && ok; ++t) {
        if (s.freshness[t] < s.freshness[t - 1] - 1e-12 ||
            s.no_freshness[t] < s.no_freshness[t - 1] - 1e-12) {
            ok = false;
            detail = "honest phase not monotone at round " + std::to_string(t);
        }
    }
    for (int t = 11; t <= 20 && ok; ++t) {
        double drop_fresh = s.freshness[t - 1] - s.freshness[t];
        double drop_uniform = s.no_freshness[t - 1] - s.no_freshness[t];
        if (drop_fresh < drop_uniform - 1e-12) {
            ok = false;
            detail = "decayed drop smaller than uniform at round " +
                     std::to_string(t);
        }
    }
    if (ok && s.freshness[0] != 0.5) {
        ok = false;
        detail = "initial reputation is not 0.5";
    }
    if (ok) detail = "honest rise, then decayed weighting punishes faster";
    report(4, "reputation dynamics under decayed vs uniform weighting", ok,
           timer.seconds(), detail);
}

// ---- 5: trained agent and reputation payoff -----------------------------

void check_headline_substitutes() {
    Timer timer;
    bool ok = true;
    std::string detail;

    // offline dataset from the mixed behavior policy on the default market
    auto factory = make_default_env_factory(50, 50);
    auto data = collect_dataset(factory, BehaviorPolicy::mixed, 500, 9);

    TrainConfig tcfg;
    tcfg.context_len = 10;
    tcfg.embed_dim = 32;
    tcfg.layers = 1;
    tcfg.batch = 32;
    tcfg.epochs = 20;
    tcfg.seed = 5;
    DtModel model = dt_train(data, tcfg, nullptr);

    auto mean_reward = [&](const char* tag) {
        SeriesConfig cfg;
        cfg.agent = tag;
        cfg.model = &model;
        cfg.reputation_enabled = false;
        cfg.episodes = 30;
        cfg.seed = 77;
        double sum = 0.0;
        for (const auto& m : run_series(cfg)) sum += m.episode_reward;
        return sum / 30.0;
    };
    double dt_reward = mean_reward("dt");
    double random_reward = mean_reward("random");
    if (dt_reward < random_reward) {
        ok = false;
        detail = "trained agent below random: " + std::to_string(dt_reward) +
                 " vs " + std::to_string(random_reward);
    }

    auto mean_welfare = [&](bool enabled) {
        SeriesConfig cfg;
        cfg.agent = "fixed";
        cfg.reputation_enabled = enabled;
        cfg.episodes = 200;
        cfg.warmup = enabled ? 5 : 0;
        cfg.seed = 42;
        double sum = 0.0;
        for (const auto& m : run_series(cfg)) sum += m.social_welfare;
        return sum / 200.0;
    };
    double sw_on = mean_welfare(true);
    double sw_off = mean_welfare(false);
    if (ok && sw_on < sw_off) {
        ok = false;
        detail = "reputation filtering lowered welfare: " +
                 std::to_string(sw_on) + " vs " + std::to_string(sw_off);
    }

    double t = timer.seconds();
    if (ok && t >= 600.0) {
        ok = false;
        detail = "exceeded the 10-minute budget";
    }
    if (ok) {
        char buf[160];
        std::snprintf(buf, sizeof buf,
                      "reward %.2f vs random %.2f; welfare %.1f vs %.1f",
                      dt_reward, random_reward, sw_on, sw_off);
        detail = buf;
    }
    report(5, "trained agent beats random; reputation filtering pays off", ok,
           t, detail);
}

// ---- 6: model numerics ---------------------------------------------------

void check_model_numerics() {
    Timer timer;
    bool ok = true;
    std::string detail;

    DtConfig cfg;
    cfg.context_len = 3;
    cfg.embed_dim = 8;
    cfg.layers = 1;
    cfg.max_timesteps = 16;
    DtModel model(cfg, 7);

    std::mt19937_64 rng(3);
    std::normal_distribution<double> normal(0.0, 1.0);
    auto window = [&](int t_len) {
        DtWindow w;
        for (int t = 0; t < t_len; ++t) {
            w.rtg.push_back(normal(rng));
            EnvState s;
            for (auto& x : s) x = normal(rng);
            w.states.push_back(s);
            w.actions.push_back(1 + t % 10);
            w.timesteps.push_back(t + 1);
        }
        return w;
    };

    DtWindow w = window(3);
    std::vector<double> grad(model.params().size(), 0.0);
    model.loss_and_grad(w, grad);
    const double eps = 1e-5;
    for (std::size_t i = 0; i < model.params().size() && ok; ++i) {
        double saved = model.params()[i];
        std::vector<double> sink(model.params().size(), 0.0);
        model.params()[i] = saved + eps;
        double up = model.loss_and_grad(w, sink);
        model.params()[i] = saved - eps;
        double down = model.loss_and_grad(w, sink);
        model.params()[i] = saved;
        double numeric = (up - down) / (2 * eps);
        double denom = std::max({1.0, std::abs(numeric), std::abs(grad[i])});
        if (std::abs(numeric - grad[i]) / denom > 1e-4) {
            ok = false;
            detail = "gradient mismatch at parameter " + std::to_string(i);
        }
    }

    for (int trial = 0; trial < 100 && ok; ++trial) {
        DtWindow base = window(3);
        auto before = model.forward(base);
        DtWindow pert = base;
        pert.rtg[2] += normal(rng);
        for (auto& x : pert.states[2]) x += normal(rng);
        pert.actions[2] += 1;
        auto after = model.forward(pert);
        if (std::abs(after[0] - before[0]) > 1e-12 ||
            std::abs(after[1] - before[1]) > 1e-12) {
            ok = false;
            detail = "future tokens leaked into earlier predictions";
        }
    }

    if (ok) {
        auto factory = make_default_env_factory(20, 20);
        auto data = collect_dataset(factory, BehaviorPolicy::mixed, 25, 31);
        for (const auto& tr : data) {
            if (tr.rtg != returns_to_go(tr.rewards)) {
                ok = false;
                detail = "stored returns-to-go break the suffix-sum identity";
            }
        }
    }
    if (ok) detail = "gradients, causal masking and return bookkeeping agree";
    report(6, "model numerics: gradients, causality, returns-to-go", ok,
           timer.seconds(), detail);
}

// ---- 7: command-line determinism ----------------------------------------

void check_cli_determinism(const std::string& cli) {
    Timer timer;
    bool ok = true;
    std::string detail;
    namespace fs = std::filesystem;
    fs::path dir = fs::temp_directory_path() / "madda_accept";
    fs::create_directories(dir);

    auto run = [&](const std::string& args) {
        std::string cmd = cli + " " + args + " > /dev/null 2>&1";
        return std::system(cmd.c_str()) == 0;
    };
    std::string a = (dir / "a.csv").string(), b = (dir / "b.csv").string();
    std::string flags =
        "sweep --axis market-size --levels 10,20 --agents random,fixed "
        "--reps 2 --seed 5 -o ";
    if (!run(flags + a) || !run(flags + b)) {
        ok = false;
        detail = "sweep invocation failed";
    } else if (read_file(a) != read_file(b)) {
        ok = false;
        detail = "sweep output differs between identical invocations";
    }

    std::string s1 = (dir / "s1.json").string(), s2 = (dir / "s2.json").string();
    std::string gen = "gen-scenario --vus 20 --rsus 20 --seed 7 -o ";
    if (ok && (!run(gen + s1) || !run(gen + s2))) {
        ok = false;
        detail = "scenario generation failed";
    } else if (ok && read_file(s1) != read_file(s2)) {
        ok = false;
        detail = "scenario bytes differ between identical invocations";
    }
    fs::remove_all(dir);
    if (ok) detail = "sweep and scenario outputs are byte-stable";
    report(7, "command-line determinism", ok, timer.seconds(), detail);
}

}  // namespace

int main(int argc, char** argv) {
    check_economics();
    check_matching_oracle();
    check_incentives();
    check_reputation_dynamics();
    check_headline_substitutes();
    check_model_numerics();
    if (argc > 1) {
        check_cli_determinism(argv[1]);
    } else {
        report(7, "command-line determinism", false, 0.0,
               "pass the CLI binary path as the first argument");
    }
    return failures == 0 ? 0 : 1;
}
