#include "madda/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

namespace madda {

using nlohmann::json;

double delivery_fraction(std::uint64_t scenario_seed, int provider_id) {
    std::mt19937_64 rng(
        mix_seed(mix_seed(scenario_seed, 0x64656c69766572ULL),
                 static_cast<std::uint64_t>(provider_id)));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    if (unit(rng) < 0.25) {
        return 0.2 + 0.3 * unit(rng);  // unreliable: delivers 20..50%
    }
    return 1.0;
}

namespace {

std::map<int, double> provider_reputations(const Scenario& sc,
                                           const EpisodeOptions& opt) {
    std::map<int, double> reps;
    for (const auto& p : sc.providers) {
        if (!opt.reputation_enabled) {
            reps[p.id] = 1.0;
        } else if (opt.ledger) {
            reps[p.id] = opt.ledger->reputation(p.id, opt.time);
        } else {
            reps[p.id] = kInitialReputation;
        }
    }
    return reps;
}

void trace_round(std::ostream& out, const AuctionState& st, int action,
                 double reward, const StepEvents& ev) {
    json accs = json::array();
    for (const auto& a : ev.acceptances)
        accs.push_back({{"side", a.side == Side::buyer ? "buyer" : "seller"},
                        {"id", a.id},
                        {"price", a.price},
                        {"regret", a.regret}});
    json line = {{"round", st.round - 1},
                 {"buyer_clock", st.buyer_clock},
                 {"seller_clock", st.seller_clock},
                 {"action", action},
                 {"reward", reward},
                 {"terminated", ev.terminated},
                 {"acceptances", accs}};
    out << line.dump() << '\n';
}

}  // namespace

EpisodeMetrics run_episode(const Scenario& scenario, Policy& agent,
                           const std::string& agent_tag, std::uint64_t seed,
                           const EpisodeOptions& opt) {
    EpisodeMetrics m;
    m.agent = agent_tag;
    m.reputation_enabled = opt.reputation_enabled;
    m.seed = seed;

    auto reps = provider_reputations(scenario, opt);
    auto graph = build_graph(scenario, reps);
    auto km = km_match(graph);
    m.matched_pairs = static_cast<int>(km.matching.pairs.size());
    if (km.matching.pairs.empty()) return m;  // no-trade episode

    auto values = calibrated_values(scenario);
    AuctionEnv env(km.matching, values.buyer, values.seller, scenario.market);

    std::mt19937_64 rng(seed);
    EnvState s = env.reset();
    agent.begin_episode(s);
    while (!env.done()) {
        int a = agent.act(s, rng);
        auto [next, r, done] = env.step(a);
        agent.on_transition(a, r, next);
        const StepEvents& ev = env.last_events();
        m.episode_reward += r;
        m.exchange_cost_total +=
            exchange_cost(ev.broadcast_count, scenario.market.comm_penalty);
        if (opt.trace) trace_round(*opt.trace, env.auction(), a, r, ev);
        s = next;
        (void)done;
    }
    m.rounds = env.auction().round - 1;

    Settlement st =
        settle(env.auction(), km.matching, scenario.market.price_factor);
    m.winning_pairs = static_cast<int>(st.winning_pairs.size());
    m.trade_success_rate =
        static_cast<double>(m.winning_pairs) / std::max(1, m.matched_pairs);
    for (const auto& [id, c] : st.buyer_charges) m.charges_total += c;
    for (const auto& [id, p] : st.seller_payments) m.payments_total += p;

    std::map<int, const VehicularUser*> users;
    for (const auto& u : scenario.users) users[u.id] = &u;
    std::uint64_t rel_seed = opt.reliability_seed.value_or(scenario.seed);

    bool first = true;
    for (const auto& [bm, sn] : st.winning_pairs) {
        double ub = st.buyer_utilities.at(bm);
        double us = st.seller_utilities.at(sn);
        if (first) {
            m.min_winner_utility = std::min(ub, us);
            first = false;
        } else {
            m.min_winner_utility = std::min({m.min_winner_utility, ub, us});
        }
        // A partial delivery voids the trade's welfare contribution.
        if (delivery_fraction(rel_seed, sn) >= 1.0) m.social_welfare += ub + us;
    }

    // Every matched pair provisions resources, so every matched provider
    // gets observed and scored, not only the ones whose trade cleared.
    if (opt.ledger && opt.record_feedback) {
        for (const auto& [bm, sn] : km.matching.pairs) {
            double frac = delivery_fraction(rel_seed, sn);
            const VehicularUser& u = *users.at(bm);
            TransactionRecord rec;
            rec.provider_id = sn;
            rec.user_id = bm;
            rec.time = opt.time;
            rec.required = u.required;
            rec.provided = {u.required.computation * frac,
                            u.required.communication * frac,
                            u.required.storage * frac};
            rec.resource_weights = u.resource_weights;
            opt.ledger->record_transaction(rec);
        }
    }
    return m;
}

std::unique_ptr<Policy> make_agent(const std::string& tag, const DtModel* model,
                                   double target_return) {
    if (tag == "random") return make_random_policy(ActionSpace{});
    if (tag == "fixed") return make_fixed_policy(1);
    if (tag == "dt") {
        if (!model)
            throw std::invalid_argument("make_agent: dt agent needs a model");
        return std::make_unique<DtPolicy>(*model, target_return);
    }
    throw std::invalid_argument("make_agent: unknown agent '" + tag + "'");
}

std::vector<EpisodeMetrics> run_series(const SeriesConfig& cfg) {
    if (cfg.episodes < 1)
        throw std::invalid_argument("run_series: episodes must be >= 1");
    if (cfg.warmup < 0)
        throw std::invalid_argument("run_series: negative warmup");

    ReputationLedger ledger;
    auto agent = make_agent(cfg.agent, cfg.model, cfg.target_return);
    std::vector<EpisodeMetrics> out;
    out.reserve(cfg.episodes);
    int total = cfg.warmup + cfg.episodes;
    for (int ep = 0; ep < total; ++ep) {
        std::uint64_t ep_seed =
            mix_seed(cfg.seed, static_cast<std::uint64_t>(ep) + 1);
        Scenario sc = generate_scenario(cfg.n_users, cfg.n_providers,
                                        SamplingConfig{}, ep_seed);
        if (cfg.compute_shift != 0.0) {
            for (auto& p : sc.providers) {
                p.owned.computation += cfg.compute_shift;
                p.cpu_frequency = p.owned.computation;
            }
        }
        EpisodeOptions opt;
        opt.ledger = &ledger;
        opt.time = ep;
        opt.record_feedback = true;
        opt.reliability_seed = mix_seed(cfg.seed, 0x72656c79ULL);
        // Warm-up episodes only feed the ledger; filtering stays off so
        // every provider gets observed at least occasionally.
        opt.reputation_enabled = ep < cfg.warmup ? false : cfg.reputation_enabled;
        EpisodeMetrics m = run_episode(sc, *agent, cfg.agent, ep_seed, opt);
        if (ep >= cfg.warmup) out.push_back(m);
    }
    return out;
}

namespace {

struct CellJob {
    double level = 0.0;
    std::string agent;
    bool rep_enabled = false;
    SeriesConfig series;
};

CellStats stats_of(const std::vector<double>& xs) {
    CellStats s;
    s.reps = static_cast<int>(xs.size());
    if (xs.empty()) return s;
    double sum = 0.0;
    for (double x : xs) sum += x;
    s.mean = sum / xs.size();
    if (xs.size() > 1) {
        double ss = 0.0;
        for (double x : xs) ss += (x - s.mean) * (x - s.mean);
        s.stddev = std::sqrt(ss / (xs.size() - 1));
    }
    return s;
}

int sweep_threads() {
    const char* env = std::getenv("MADDA_THREADS");
    if (!env || !*env) return 1;
    int n = std::atoi(env);
    return n < 1 ? 1 : n;
}

std::uint64_t cell_seed(std::uint64_t base, double level, const std::string& agent,
                        bool rep_enabled) {
    std::uint64_t bits;
    static_assert(sizeof bits == sizeof level);
    std::memcpy(&bits, &level, sizeof bits);
    std::uint64_t h = mix_seed(base, bits);
    h = mix_seed(h, std::uint64_t{0xcbf29ce484222325ULL});
    for (unsigned char c : agent) h = mix_seed(h, c + 1);
    return mix_seed(h, rep_enabled ? 1 : 2);
}

const char* const kSweepMetrics[] = {
    "social_welfare", "exchange_cost_total", "episode_reward",
    "trade_success_rate", "rounds", "winning_pairs", "matched_pairs"};

double metric_value(const EpisodeMetrics& m, const std::string& name) {
    if (name == "social_welfare") return m.social_welfare;
    if (name == "exchange_cost_total") return m.exchange_cost_total;
    if (name == "episode_reward") return m.episode_reward;
    if (name == "trade_success_rate") return m.trade_success_rate;
    if (name == "rounds") return m.rounds;
    if (name == "winning_pairs") return m.winning_pairs;
    return m.matched_pairs;
}

}  // namespace

SweepResult sweep(const SweepConfig& cfg) {
    if (cfg.levels.empty()) throw std::invalid_argument("sweep: no levels");
    if (cfg.agents.empty()) throw std::invalid_argument("sweep: no agents");
    if (cfg.reps < 1) throw std::invalid_argument("sweep: reps must be >= 1");
    if (cfg.axis != "market-size" && cfg.axis != "rsu-compute")
        throw std::invalid_argument("sweep: unknown axis '" + cfg.axis + "'");

    SweepResult out;
    out.axis = cfg.axis;
    out.levels = cfg.levels;
    out.agents = cfg.agents;

    std::vector<CellJob> jobs;
    for (double level : cfg.levels) {
        for (const auto& agent : cfg.agents) {
            for (bool rep : {true, false}) {
                CellJob job;
                job.level = level;
                job.agent = agent;
                job.rep_enabled = rep;
                SeriesConfig& s = job.series;
                if (cfg.axis == "market-size") {
                    s.n_users = s.n_providers = static_cast<int>(level);
                } else {
                    s.n_users = s.n_providers = 50;
                    s.compute_shift = level - 40.0;  // base range starts at 40
                }
                s.agent = agent;
                s.model = cfg.model;
                s.target_return = cfg.target_return;
                s.reputation_enabled = rep;
                s.episodes = cfg.reps;
                s.warmup = rep ? cfg.warmup : 0;
                s.seed = cell_seed(cfg.seed, level, agent, rep);
                jobs.push_back(std::move(job));
            }
        }
    }

    std::vector<std::vector<EpisodeMetrics>> results(jobs.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next.fetch_add(1); i < jobs.size();
             i = next.fetch_add(1))
            results[i] = run_series(jobs[i].series);
    };
    int n_threads = std::min<int>(sweep_threads(), static_cast<int>(jobs.size()));
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    for (std::size_t i = 0; i < jobs.size(); ++i) {
        const CellJob& job = jobs[i];
        for (const char* metric : kSweepMetrics) {
            std::vector<double> xs;
            xs.reserve(results[i].size());
            for (const auto& m : results[i]) xs.push_back(metric_value(m, metric));
            out.cells[{job.level, job.agent, job.rep_enabled, metric}] =
                stats_of(xs);
        }
    }
    return out;
}

namespace {

std::string num(double x) { return json(x).dump(); }

}  // namespace

std::string sweep_to_csv(const SweepResult& r) {
    std::ostringstream out;
    out << "axis_value,agent,reputation_enabled,metric,mean,stddev,reps\n";
    for (const auto& [key, st] : r.cells) {
        const auto& [level, agent, rep, metric] = key;
        out << num(level) << ',' << agent << ',' << (rep ? "true" : "false")
            << ',' << metric << ',' << num(st.mean) << ',' << num(st.stddev)
            << ',' << st.reps << '\n';
    }
    return out.str();
}

std::string sweep_to_json(const SweepResult& r) {
    json cells = json::array();
    for (const auto& [key, st] : r.cells) {
        const auto& [level, agent, rep, metric] = key;
        cells.push_back({{"axis_value", level},
                         {"agent", agent},
                         {"reputation_enabled", rep},
                         {"metric", metric},
                         {"mean", st.mean},
                         {"stddev", st.stddev},
                         {"reps", st.reps}});
    }
    json j = {{"axis", r.axis},
              {"levels", r.levels},
              {"agents", r.agents},
              {"cells", cells}};
    return j.dump(2);
}

SweepResult sweep_from_json(const std::string& text) {
    json j = json::parse(text);
    SweepResult r;
    r.axis = j.at("axis").get<std::string>();
    r.levels = j.at("levels").get<std::vector<double>>();
    r.agents = j.at("agents").get<std::vector<std::string>>();
    for (const auto& c : j.at("cells")) {
        CellStats st;
        st.mean = c.at("mean").get<double>();
        st.stddev = c.at("stddev").get<double>();
        st.reps = c.at("reps").get<int>();
        r.cells[{c.at("axis_value").get<double>(),
                 c.at("agent").get<std::string>(),
                 c.at("reputation_enabled").get<bool>(),
                 c.at("metric").get<std::string>()}] = st;
    }
    return r;
}

void emit_results(const SweepResult& r, const std::string& path,
                  const std::string& format) {
    std::string body;
    if (format == "csv") {
        body = sweep_to_csv(r);
    } else if (format == "json") {
        body = sweep_to_json(r);
    } else {
        throw std::invalid_argument("emit_results: unknown format '" + format +
                                    "'");
    }
    std::ofstream out(path);
    if (!out) throw std::runtime_error("emit_results: cannot write " + path);
    out << body;
    if (!out) throw std::runtime_error("emit_results: write failed for " + path);
}

namespace {

// Baseline run under the single-increment auctioneer, with the clock value
// seen at the start of every buyer-side and seller-side round. The probe
// replays declarations against this frozen schedule so that only the probed
// participant's behavior varies.
struct BaselineRun {
    AuctionState state;
    Settlement settlement;
    std::vector<double> buyer_clocks;   // clock entering each buyer round
    std::vector<double> seller_clocks;  // clock entering each seller round
};

BaselineRun baseline_fixed(const PerfectMatching& gamma,
                           const std::map<int, double>& buyer_values,
                           const std::map<int, double>& seller_values,
                           const MarketParams& market) {
    BaselineRun run;
    run.state = init_auction(gamma, buyer_values, seller_values,
                             market.price_min, market.price_max);
    while (!run.state.terminated) {
        if (run.state.active_side == Side::buyer)
            run.buyer_clocks.push_back(run.state.buyer_clock);
        else
            run.seller_clocks.push_back(run.state.seller_clock);
        step(run.state, run.state.min_increment);
    }
    run.settlement = settle(run.state, gamma, market.price_factor);
    return run;
}

// Index of the round where a declaration first crosses the clock; -1 when
// the schedule never reaches it.
int commit_round(const std::vector<double>& clocks, double declared, bool buyer) {
    for (std::size_t i = 0; i < clocks.size(); ++i) {
        if (buyer ? clocks[i] <= declared : clocks[i] >= declared)
            return static_cast<int>(i);
    }
    return -1;
}

int closest_max(const std::vector<double>& utility,
                const std::vector<double>& grid, double truth) {
    double best = *std::max_element(utility.begin(), utility.end());
    int pick = 0;
    double dist = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < utility.size(); ++i) {
        if (utility[i] < best - 1e-12) continue;
        double d = std::abs(grid[i] - truth);
        if (d < dist) {
            dist = d;
            pick = static_cast<int>(i);
        }
    }
    return pick;
}

}  // namespace

IrIcProbe probe_ir_ic(const Scenario& scenario, int grid_steps) {
    if (grid_steps < 2)
        throw std::invalid_argument("probe_ir_ic: need at least 2 grid points");

    std::map<int, double> reps;
    for (const auto& p : scenario.providers) reps[p.id] = 1.0;
    auto graph = build_graph(scenario, reps);
    auto km = km_match(graph);
    if (km.matching.pairs.empty())
        throw std::runtime_error("probe_ir_ic: scenario admits no match");
    auto values = calibrated_values(scenario);

    BaselineRun base = baseline_fixed(km.matching, values.buyer, values.seller,
                                      scenario.market);
    if (base.settlement.winning_pairs.empty())
        throw std::runtime_error("probe_ir_ic: baseline run clears no trade");
    auto [probe_m, probe_n] = base.settlement.winning_pairs.front();

    const MarketParams& mk = scenario.market;
    std::vector<double> grid(grid_steps);
    for (int i = 0; i < grid_steps; ++i)
        grid[i] = mk.price_min +
                  (mk.price_max - mk.price_min) * i / (grid_steps - 1);

    IrIcProbe out;
    out.buyer.participant = probe_m;
    out.buyer.true_value = values.buyer.at(probe_m);
    out.buyer.declared = grid;
    out.seller.participant = probe_n;
    out.seller.true_value = values.seller.at(probe_n);
    out.seller.declared = grid;

    double p_star = base.settlement.clearing_price;
    int cut = base.state.crossing_side == Side::seller ? 1 : 0;

    // Winning prefix of the candidate list, ordered by buyer commitment
    // round (ties by descending buy-bid), against the frozen schedule.
    // declared_m / declared_n override the probed pair's declarations.
    auto pair_wins = [&](double declared_m, double declared_n) {
        struct Cand {
            int round;
            double bid;
            int buyer;
        };
        std::vector<Cand> lambda;
        for (const auto& [bm, sn] : km.matching.pairs) {
            double bid = bm == probe_m ? declared_m : values.buyer.at(bm);
            double ask = sn == probe_n ? declared_n : values.seller.at(sn);
            int br = commit_round(base.buyer_clocks, bid, true);
            int sr = commit_round(base.seller_clocks, ask, false);
            if (br < 0 || sr < 0) continue;
            lambda.push_back({br, bid, bm});
        }
        std::sort(lambda.begin(), lambda.end(), [](const Cand& a, const Cand& b) {
            if (a.round != b.round) return a.round < b.round;
            if (a.bid != b.bid) return a.bid > b.bid;
            return a.buyer < b.buyer;
        });
        int kappa = std::max(0, static_cast<int>(lambda.size()) - cut);
        for (int i = 0; i < kappa; ++i)
            if (lambda[i].buyer == probe_m) return true;
        return false;
    };

    for (double g : grid) {
        double u = pair_wins(g, out.seller.true_value)
                       ? out.buyer.true_value - p_star
                       : 0.0;
        out.buyer.utility.push_back(u);
    }
    for (double g : grid) {
        double u = pair_wins(out.buyer.true_value, g)
                       ? p_star - out.seller.true_value
                       : 0.0;
        out.seller.utility.push_back(u);
    }
    out.buyer.argmax = closest_max(out.buyer.utility, grid, out.buyer.true_value);
    out.seller.argmax =
        closest_max(out.seller.utility, grid, out.seller.true_value);
    return out;
}

namespace {

json curve_json(const UtilityCurve& c) {
    return {{"participant", c.participant},
            {"true_value", c.true_value},
            {"declared", c.declared},
            {"utility", c.utility},
            {"argmax", c.argmax}};
}

}  // namespace

std::string probe_to_json(const IrIcProbe& p) {
    json j = {{"buyer", curve_json(p.buyer)}, {"seller", curve_json(p.seller)}};
    return j.dump(2);
}

ReputationSeries reputation_demo(int honest_rounds, int malicious_rounds,
                                 double xi, std::uint64_t seed) {
    if (honest_rounds < 1 || malicious_rounds < 1)
        throw std::invalid_argument("reputation_demo: round counts must be >= 1");

    int total = honest_rounds + malicious_rounds;
    ReputationSeries out;
    out.freshness.push_back(kInitialReputation);
    out.no_freshness.push_back(kInitialReputation);
    out.random_weight.push_back(kInitialReputation);

    std::vector<double> scores;
    std::vector<double> times;
    for (int t = 1; t <= total; ++t) {
        scores.push_back(t <= honest_rounds ? 1.0 : 0.0);
        times.push_back(t);

        auto fresh = freshness_weights(times, t, xi);
        double d_fresh = 0.0;
        for (std::size_t k = 0; k < scores.size(); ++k)
            d_fresh += fresh[k] * scores[k];
        out.freshness.push_back(d_fresh);

        double d_uniform = 0.0;
        for (double s : scores) d_uniform += s;
        out.no_freshness.push_back(d_uniform / scores.size());

        std::mt19937_64 rng(mix_seed(seed, static_cast<std::uint64_t>(t)));
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        std::vector<double> rw(scores.size());
        double sum = 0.0;
        for (auto& w : rw) {
            w = unit(rng);
            sum += w;
        }
        double d_random = 0.0;
        for (std::size_t k = 0; k < scores.size(); ++k)
            d_random += rw[k] / sum * scores[k];
        out.random_weight.push_back(d_random);
    }
    return out;
}

std::string reputation_series_to_json(const ReputationSeries& s) {
    json j = {{"freshness", s.freshness},
              {"no_freshness", s.no_freshness},
              {"random_weight", s.random_weight}};
    return j.dump(2);
}

}  // namespace madda
