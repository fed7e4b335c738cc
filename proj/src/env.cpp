#include "madda/env.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace madda {

using nlohmann::json;

AuctionEnv::AuctionEnv(PerfectMatching gamma, std::map<int, double> buyer_values,
                       std::map<int, double> seller_values, MarketParams market,
                       ActionSpace actions)
    : gamma_(std::move(gamma)),
      buyer_values_(std::move(buyer_values)),
      seller_values_(std::move(seller_values)),
      market_(market),
      actions_(actions) {
    reset();
}

EnvState AuctionEnv::reset() {
    state_ = init_auction(gamma_, buyer_values_, seller_values_, market_.price_min,
                          market_.price_max);
    last_events_ = {};
    return observe();
}

EnvState AuctionEnv::observe() const {
    return {static_cast<double>(static_cast<int>(state_.active_side)),
            static_cast<double>(state_.round),
            state_.buyer_clock,
            state_.seller_clock,
            static_cast<double>(state_.buy_winners.size()),
            static_cast<double>(state_.sell_winners.size())};
}

std::tuple<EnvState, double, bool> AuctionEnv::step(int action) {
    if (state_.terminated) throw std::logic_error("AuctionEnv::step: episode finished");
    if (!actions_.contains(action))
        throw std::invalid_argument("AuctionEnv::step: action outside the step space");
    last_events_ = madda::step(state_, action * state_.min_increment);
    double reward;
    if (!last_events_.acceptances.empty()) {
        reward = 0.0;
        for (const auto& a : last_events_.acceptances) reward -= a.regret;
    } else {
        reward = -exchange_cost(last_events_.broadcast_count, market_.comm_penalty);
    }
    return {observe(), reward, state_.terminated};
}

namespace {

struct RandomPolicy : Policy {
    int max_mult;
    explicit RandomPolicy(int m) : max_mult(m) {}
    int act(const EnvState&, std::mt19937_64& rng) override {
        return std::uniform_int_distribution<int>(1, max_mult)(rng);
    }
};

struct FixedPolicy : Policy {
    int mult;
    explicit FixedPolicy(int m) : mult(m) {}
    int act(const EnvState&, std::mt19937_64&) override { return mult; }
};

}  // namespace

std::unique_ptr<Policy> make_random_policy(const ActionSpace& actions) {
    return std::make_unique<RandomPolicy>(actions.max_multiplier);
}

std::unique_ptr<Policy> make_fixed_policy(int multiplier) {
    return std::make_unique<FixedPolicy>(multiplier);
}

std::vector<double> returns_to_go(const std::vector<double>& rewards) {
    if (rewards.empty()) throw std::invalid_argument("returns_to_go: empty sequence");
    std::vector<double> rtg(rewards.size());
    double acc = 0.0;
    for (std::size_t i = rewards.size(); i-- > 0;) {
        acc += rewards[i];
        rtg[i] = acc;
    }
    return rtg;
}

Trajectory rollout(AuctionEnv& env, Policy& policy, std::uint64_t seed) {
    Trajectory traj;
    traj.seed = seed;
    std::mt19937_64 rng(seed);
    EnvState s = env.reset();
    policy.begin_episode(s);
    bool done = false;
    while (!done) {
        int a = policy.act(s, rng);
        auto [next, r, d] = env.step(a);
        policy.on_transition(a, r, next);
        traj.states.push_back(s);
        traj.actions.push_back(a);
        traj.rewards.push_back(r);
        s = next;
        done = d;
    }
    traj.terminal = true;
    traj.rtg = returns_to_go(traj.rewards);
    return traj;
}

EnvFactory make_default_env_factory(int n_users, int n_providers, ActionSpace actions) {
    return [=](std::uint64_t seed) {
        Scenario sc = generate_scenario(n_users, n_providers, SamplingConfig{}, seed);
        std::map<int, double> reps;
        for (const auto& p : sc.providers) reps[p.id] = 1.0;
        auto graph = build_graph(sc, reps);
        auto km = km_match(graph);
        auto values = calibrated_values(sc);
        return AuctionEnv(km.matching, values.buyer, values.seller, sc.market, actions);
    };
}

std::vector<Trajectory> collect_dataset(const EnvFactory& factory,
                                        BehaviorPolicy behavior, int episodes,
                                        std::uint64_t seed, ActionSpace actions) {
    if (episodes <= 0)
        throw std::invalid_argument("collect_dataset: episode count must be positive");
    std::vector<Trajectory> data;
    data.reserve(episodes);
    auto random_policy = make_random_policy(actions);
    auto fixed_policy = make_fixed_policy(1);
    std::mt19937_64 pick(mix_seed(seed, 0x6d69786564ULL));
    for (int ep = 0; ep < episodes; ++ep) {
        std::uint64_t ep_seed = mix_seed(seed, static_cast<std::uint64_t>(ep) + 1);
        AuctionEnv env = factory(ep_seed);
        Policy* policy = nullptr;
        switch (behavior) {
            case BehaviorPolicy::random: policy = random_policy.get(); break;
            case BehaviorPolicy::fixed: policy = fixed_policy.get(); break;
            case BehaviorPolicy::mixed:
                policy = std::uniform_int_distribution<int>(0, 1)(pick) == 0
                             ? random_policy.get()
                             : fixed_policy.get();
                break;
        }
        data.push_back(rollout(env, *policy, ep_seed));
    }
    return data;
}

void save_dataset(const std::vector<Trajectory>& data, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    for (std::size_t ep = 0; ep < data.size(); ++ep) {
        const auto& tr = data[ep];
        for (std::size_t t = 0; t < tr.states.size(); ++t) {
            json line = {{"episode", ep},
                         {"t", t + 1},
                         {"rtg", tr.rtg[t]},
                         {"state", tr.states[t]},
                         {"action", tr.actions[t]},
                         {"reward", tr.rewards[t]},
                         {"done", t + 1 == tr.states.size()},
                         {"seed", tr.seed}};
            out << line.dump() << '\n';
        }
    }
}

std::vector<Trajectory> load_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::vector<Trajectory> data;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json j = json::parse(line);
        std::size_t ep = j.at("episode").get<std::size_t>();
        if (ep >= data.size()) data.resize(ep + 1);
        auto& tr = data[ep];
        tr.states.push_back(j.at("state").get<EnvState>());
        tr.actions.push_back(j.at("action").get<int>());
        tr.rewards.push_back(j.at("reward").get<double>());
        tr.rtg.push_back(j.at("rtg").get<double>());
        tr.seed = j.at("seed").get<std::uint64_t>();
        if (j.at("done").get<bool>()) tr.terminal = true;
    }
    return data;
}

}  // namespace madda
