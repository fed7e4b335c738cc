#pragma once

#include <map>
#include <string>
#include <vector>

#include "madda/types.hpp"

namespace madda {

// Initial reputation for providers without any transaction history.
inline constexpr double kInitialReputation = 0.5;

struct TransactionRecord {
    int provider_id = 0;
    int user_id = 0;
    double time = 0.0;
    ResourceVector required;
    ResourceVector provided;
    std::array<double, kNumResources> resource_weights{1.0 / 3, 1.0 / 3, 1.0 / 3};
};

class ReputationLedger {
public:
    explicit ReputationLedger(double decay_rate = 0.1);

    double decay_rate() const { return decay_rate_; }
    // Appends a record; rejects time regressions within a provider's history.
    void record_transaction(const TransactionRecord& rec);
    const std::vector<TransactionRecord>& history(int provider_id) const;
    bool has_history(int provider_id) const;

    // Decayed weighted-feedback reputation at query time `now`.
    // Providers with no history fall back to kInitialReputation.
    double reputation(int provider_id, double now) const;

    std::string to_jsonl() const;
    static ReputationLedger from_jsonl(const std::string& text, double decay_rate = 0.1);

private:
    double decay_rate_;
    std::map<int, std::vector<TransactionRecord>> records_;
};

// min(required, provided) / required; rejects required == 0.
double feedback_evaluation(double required_k, double provided_k);

// Full-vector feedback: a component with zero requirement scores 1.0.
double weighted_feedback(const std::array<double, kNumResources>& weights,
                         const std::array<double, kNumResources>& scores);

// Feedback score of a whole record under its own resource weights.
double record_feedback(const TransactionRecord& rec);

// Normalized exponential-decay weights exp(-xi * (now - t)) / sum.
std::vector<double> freshness_weights(const std::vector<double>& times, double now,
                                      double xi);

}  // namespace madda
