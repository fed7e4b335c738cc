#pragma once

#include <array>
#include <functional>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "madda/auction.hpp"
#include "madda/scenario.hpp"
#include "madda/valuation.hpp"

namespace madda {

// (psi, round, buyer clock, seller clock, committed buyers, committed sellers)
using EnvState = std::array<double, 6>;

struct ActionSpace {
    int max_multiplier = 10;  // step multipliers 1..max of the minimum increment
    bool contains(int a) const { return a >= 1 && a <= max_multiplier; }
};

// MDP wrapper around one auction: actions pick the clock step multiplier,
// rewards are negative regret on acceptance rounds and negative broadcast
// cost otherwise.
class AuctionEnv {
public:
    AuctionEnv(PerfectMatching gamma, std::map<int, double> buyer_values,
               std::map<int, double> seller_values, MarketParams market,
               ActionSpace actions = {});

    EnvState reset();
    // Returns (state, reward, done). Throws when stepping a finished episode.
    std::tuple<EnvState, double, bool> step(int action);

    EnvState observe() const;
    bool done() const { return state_.terminated; }
    const AuctionState& auction() const { return state_; }
    const PerfectMatching& gamma() const { return gamma_; }
    const ActionSpace& actions() const { return actions_; }
    const MarketParams& market() const { return market_; }
    const StepEvents& last_events() const { return last_events_; }

private:
    PerfectMatching gamma_;
    std::map<int, double> buyer_values_;
    std::map<int, double> seller_values_;
    MarketParams market_;
    ActionSpace actions_;
    AuctionState state_;
    StepEvents last_events_;
};

struct Policy {
    virtual ~Policy() = default;
    virtual int act(const EnvState& state, std::mt19937_64& rng) = 0;
    virtual void begin_episode(const EnvState& /*initial*/) {}
    virtual void on_transition(int /*action*/, double /*reward*/,
                               const EnvState& /*next*/) {}
};

std::unique_ptr<Policy> make_random_policy(const ActionSpace& actions);
std::unique_ptr<Policy> make_fixed_policy(int multiplier = 1);

struct Trajectory {
    std::vector<EnvState> states;
    std::vector<int> actions;
    std::vector<double> rewards;
    std::vector<double> rtg;  // suffix sums of rewards
    bool terminal = false;
    std::uint64_t seed = 0;
};

std::vector<double> returns_to_go(const std::vector<double>& rewards);

// Runs one full episode; fills returns-to-go.
Trajectory rollout(AuctionEnv& env, Policy& policy, std::uint64_t seed);

enum class BehaviorPolicy { random, fixed, mixed };

using EnvFactory = std::function<AuctionEnv(std::uint64_t seed)>;

// Default-market factory: fresh scenario per episode seed, all providers
// at full reputation, matched and calibrated.
EnvFactory make_default_env_factory(int n_users, int n_providers,
                                    ActionSpace actions = {});

std::vector<Trajectory> collect_dataset(const EnvFactory& factory,
                                        BehaviorPolicy behavior, int episodes,
                                        std::uint64_t seed,
                                        ActionSpace actions = {});

void save_dataset(const std::vector<Trajectory>& data, const std::string& path);
std::vector<Trajectory> load_dataset(const std::string& path);

}  // namespace madda
