#include "madda/reputation.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace madda {

using nlohmann::json;

ReputationLedger::ReputationLedger(double decay_rate) : decay_rate_(decay_rate) {
    if (!(decay_rate > 0.0))
        throw std::invalid_argument("ReputationLedger: decay rate must be positive");
}

void ReputationLedger::record_transaction(const TransactionRecord& rec) {
    if (!std::isfinite(rec.time))
        throw std::invalid_argument("record_transaction: non-finite time");
    auto& hist = records_[rec.provider_id];
    if (!hist.empty() && rec.time < hist.back().time)
        throw std::invalid_argument("record_transaction: time regression for provider " +
                                    std::to_string(rec.provider_id));
    hist.push_back(rec);
}

const std::vector<TransactionRecord>& ReputationLedger::history(int provider_id) const {
    static const std::vector<TransactionRecord> empty;
    auto it = records_.find(provider_id);
    return it == records_.end() ? empty : it->second;
}

bool ReputationLedger::has_history(int provider_id) const {
    auto it = records_.find(provider_id);
    return it != records_.end() && !it->second.empty();
}

double feedback_evaluation(double required_k, double provided_k) {
    if (!(required_k > 0.0))
        throw std::invalid_argument("feedback_evaluation: required amount must be positive");
    if (provided_k < 0.0)
        throw std::invalid_argument("feedback_evaluation: provided amount must be nonnegative");
    return std::min(required_k, provided_k) / required_k;
}

double weighted_feedback(const std::array<double, kNumResources>& weights,
                         const std::array<double, kNumResources>& scores) {
    double sum = 0.0;
    for (int k = 0; k < kNumResources; ++k) sum += weights[k] * scores[k];
    return sum;
}

double record_feedback(const TransactionRecord& rec) {
    std::array<double, kNumResources> scores{};
    for (int k = 0; k < kNumResources; ++k) {
        // Nothing demanded for this resource: trivially satisfied.
        scores[k] = rec.required[k] > 0.0
                        ? feedback_evaluation(rec.required[k], rec.provided[k])
                        : 1.0;
    }
    return weighted_feedback(rec.resource_weights, scores);
}

std::vector<double> freshness_weights(const std::vector<double>& times, double now,
                                      double xi) {
    if (times.empty()) throw std::invalid_argument("freshness_weights: empty history");
    if (!(xi > 0.0)) throw std::invalid_argument("freshness_weights: xi must be positive");
    std::vector<double> w(times.size());
    double total = 0.0;
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (times[i] > now)
            throw std::invalid_argument("freshness_weights: record time exceeds now");
        w[i] = std::exp(-xi * (now - times[i]));
        total += w[i];
    }
    for (double& x : w) x /= total;
    return w;
}

double ReputationLedger::reputation(int provider_id, double now) const {
    auto it = records_.find(provider_id);
    if (it == records_.end() || it->second.empty()) return kInitialReputation;
    const auto& hist = it->second;
    std::vector<double> times(hist.size());
    for (std::size_t i = 0; i < hist.size(); ++i) times[i] = hist[i].time;
    auto lambda = freshness_weights(times, now, decay_rate_);
    double rep = 0.0;
    for (std::size_t i = 0; i < hist.size(); ++i)
        rep += lambda[i] * record_feedback(hist[i]);
    return rep;
}

std::string ReputationLedger::to_jsonl() const {
    std::ostringstream out;
    for (const auto& [pid, hist] : records_) {
        for (const auto& r : hist) {
            json line = {{"provider_id", r.provider_id},
                         {"user_id", r.user_id},
                         {"time", r.time},
                         {"required",
                          {{"computation", r.required.computation},
                           {"communication", r.required.communication},
                           {"storage", r.required.storage}}},
                         {"provided",
                          {{"computation", r.provided.computation},
                           {"communication", r.provided.communication},
                           {"storage", r.provided.storage}}},
                         {"resource_weights", r.resource_weights}};
            out << line.dump() << '\n';
        }
    }
    return out.str();
}

ReputationLedger ReputationLedger::from_jsonl(const std::string& text, double decay_rate) {
    ReputationLedger ledger(decay_rate);
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json j = json::parse(line);
        TransactionRecord r;
        r.provider_id = j.at("provider_id").get<int>();
        r.user_id = j.at("user_id").get<int>();
        r.time = j.at("time").get<double>();
        r.required = {j.at("required").at("computation").get<double>(),
                      j.at("required").at("communication").get<double>(),
                      j.at("required").at("storage").get<double>()};
        r.provided = {j.at("provided").at("computation").get<double>(),
                      j.at("provided").at("communication").get<double>(),
                      j.at("provided").at("storage").get<double>()};
        r.resource_weights =
            j.at("resource_weights").get<std::array<double, kNumResources>>();
        ledger.record_transaction(r);
    }
    return ledger;
}

}  // namespace madda
