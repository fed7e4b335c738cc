#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "madda/env.hpp"

namespace madda {

// Causally masked single-head attention: output o is the convex
// combination of values v_1..v_o weighted by softmax over <q_o, k_j>.
// Rows are tokens; q, k, v must share shape.
std::vector<std::vector<double>> causal_attention(
    const std::vector<std::vector<double>>& q,
    const std::vector<std::vector<double>>& k,
    const std::vector<std::vector<double>>& v);

struct DtConfig {
    int context_len = 20;   // K timesteps, 3K tokens
    int embed_dim = 64;     // H
    int layers = 2;
    int max_timesteps = 512;
    int action_max = 10;
    int state_dim = 6;
    double reward_norm = 1.0;              // divisor applied to returns-to-go
    std::array<double, 6> state_scale{1, 1, 1, 1, 1, 1};
};

// One training window: T <= K timesteps. For inference the final action
// may be absent (the sequence then ends at the last state token).
struct DtWindow {
    std::vector<double> rtg;        // length T, already divided by reward_norm
    std::vector<EnvState> states;   // length T, raw (scaled inside the model)
    std::vector<double> actions;    // length T (training) or T-1 (inference)
    std::vector<int> timesteps;     // length T, absolute 1-based round indices
};

class DtModel {
public:
    explicit DtModel(const DtConfig& cfg, std::uint64_t param_seed = 0);

    const DtConfig& config() const { return cfg_; }
    std::vector<double>& params() { return params_; }
    const std::vector<double>& params() const { return params_; }

    // Action predictions at each state token.
    std::vector<double> forward(const DtWindow& window) const;

    // Mean squared error against window.actions plus parameter gradient;
    // grad must have params().size() entries and is accumulated into.
    double loss_and_grad(const DtWindow& window, std::vector<double>& grad) const;

    // Prediction at the latest state token, snapped to the step space.
    int act(const DtWindow& window) const;

    std::string to_json() const;
    static DtModel from_json(const std::string& text);
    void save(const std::string& path) const;
    static DtModel load(const std::string& path);

private:
    DtConfig cfg_;
    std::vector<double> params_;
};

struct TrainConfig {
    int context_len = 20;
    int embed_dim = 64;
    int layers = 2;
    int batch = 64;
    int epochs = 50;
    double learning_rate = 1e-3;
    std::uint64_t seed = 0;
    int steps_per_epoch = 0;  // 0: derived from dataset size
    int action_max = 10;
};

struct TrainReport {
    std::vector<double> epoch_losses;
};

DtModel dt_train(const std::vector<Trajectory>& data, const TrainConfig& cfg,
                 TrainReport* report = nullptr);

// Return-conditioned policy following the trained model; keeps the last K
// timesteps of (return-to-go, state, action) context.
class DtPolicy : public Policy {
public:
    DtPolicy(const DtModel& model, double target_return = 1.0);
    void begin_episode(const EnvState& initial) override;
    int act(const EnvState& state, std::mt19937_64& rng) override;
    void on_transition(int action, double reward, const EnvState& next) override;

private:
    const DtModel* model_;
    double target_return_;
    std::vector<double> rtg_;
    std::vector<EnvState> states_;
    std::vector<double> actions_;
    std::vector<int> timesteps_;
};

}  // namespace madda
