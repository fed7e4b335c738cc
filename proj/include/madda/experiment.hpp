#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <memory>
#include <string>
#include <tuple>
#include <vector>

#include "madda/dt_model.hpp"
#include "madda/reputation.hpp"

namespace madda {

struct EpisodeMetrics {
    double social_welfare = 0.0;       // realized (failed deliveries void a pair)
    double exchange_cost_total = 0.0;
    int winning_pairs = 0;             // kappa
    int matched_pairs = 0;             // |Gamma|
    double trade_success_rate = 0.0;   // kappa / max(1, |Gamma|)
    int rounds = 0;
    double episode_reward = 0.0;
    double charges_total = 0.0;
    double payments_total = 0.0;
    double min_winner_utility = 0.0;
    std::string agent;
    bool reputation_enabled = true;
    std::uint64_t seed = 0;
};

// Fraction of the promised resources a provider actually delivers.
// Deterministic in (scenario seed, provider id): most providers deliver in
// full, a minority only partially. Partial deliveries are treated as failed
// trades for welfare accounting and feed low feedback scores to the ledger.
double delivery_fraction(std::uint64_t scenario_seed, int provider_id);

struct EpisodeOptions {
    bool reputation_enabled = true;
    // Seed of the delivery-reliability draw; series runs pin it so a
    // provider keeps the same reliability across episodes. Defaults to the
    // scenario seed.
    std::optional<std::uint64_t> reliability_seed;
    // Providers are scored from this ledger when reputation is enabled;
    // without a ledger they all sit at the initial reputation. Disabled
    // reputation pins everyone to 1.0 so the admission check never prunes.
    ReputationLedger* ledger = nullptr;
    double time = 0.0;            // ledger query/record timestamp
    bool record_feedback = false;
    std::ostream* trace = nullptr;  // per-round JSON lines when set
};

EpisodeMetrics run_episode(const Scenario& scenario, Policy& agent,
                           const std::string& agent_tag, std::uint64_t seed,
                           const EpisodeOptions& opt = {});

// Agent by tag: "random", "fixed" (single-increment steps) or "dt" (needs a
// trained model). Throws std::invalid_argument on unknown tags.
std::unique_ptr<Policy> make_agent(const std::string& tag,
                                   const DtModel* model = nullptr,
                                   double target_return = 1.0);

struct SeriesConfig {
    int n_users = 50;
    int n_providers = 50;
    std::string agent = "fixed";
    const DtModel* model = nullptr;
    double target_return = 1.0;
    bool reputation_enabled = true;
    int episodes = 1;
    // Leading episodes that only seed the feedback ledger (reputation
    // filtering off, outcomes recorded, metrics not reported). They let the
    // ledger learn which providers fail before filtering kicks in.
    int warmup = 0;
    std::uint64_t seed = 0;
    // Added to every provider's computation resources (and clock rate); used
    // by the compute-level sweep axis.
    double compute_shift = 0.0;
};

// Sequence of fresh-scenario episodes sharing one feedback ledger; episode
// index doubles as the ledger timestamp.
std::vector<EpisodeMetrics> run_series(const SeriesConfig& cfg);

struct CellStats {
    double mean = 0.0;
    double stddev = 0.0;
    int reps = 0;
};

struct SweepResult {
    std::string axis;
    std::vector<double> levels;
    std::vector<std::string> agents;
    // (axis value, agent, reputation flag, metric) -> statistics
    std::map<std::tuple<double, std::string, bool, std::string>, CellStats> cells;
};

struct SweepConfig {
    std::string axis = "market-size";  // or "rsu-compute"
    std::vector<double> levels;
    std::vector<std::string> agents;
    int reps = 1;
    std::uint64_t seed = 0;
    const DtModel* model = nullptr;
    double target_return = 1.0;
    int warmup = 5;  // ledger warm-up episodes per reputation-enabled cell
};

// Cross product of levels x agents x {reputation on, off}; cell seeds are
// derived from the cell key, not the enumeration order. MADDA_THREADS caps
// the number of worker threads (default 1).
SweepResult sweep(const SweepConfig& cfg);

std::string sweep_to_csv(const SweepResult& r);
std::string sweep_to_json(const SweepResult& r);
SweepResult sweep_from_json(const std::string& text);
void emit_results(const SweepResult& r, const std::string& path,
                  const std::string& format);

struct UtilityCurve {
    int participant = 0;
    double true_value = 0.0;
    std::vector<double> declared;
    std::vector<double> utility;  // true utility under each declaration
    int argmax = 0;
};

struct IrIcProbe {
    UtilityCurve buyer;
    UtilityCurve seller;
};

// Replays the auction under the single-increment auctioneer with one winning
// buyer's (resp. seller's) declared value swept over a price grid; everything
// else stays fixed. Throws when the baseline run produces no winning pair.
IrIcProbe probe_ir_ic(const Scenario& scenario, int grid_steps);

std::string probe_to_json(const IrIcProbe& p);

struct ReputationSeries {
    // index 0 is the pre-history initial reputation; one entry per round after
    std::vector<double> freshness;
    std::vector<double> no_freshness;
    std::vector<double> random_weight;
};

// One seller delivers in full for honest_rounds, then nothing. Reputation is
// recomputed each round under decayed, uniform and seeded-random feedback
// weights.
ReputationSeries reputation_demo(int honest_rounds, int malicious_rounds,
                                 double xi = 0.1, std::uint64_t seed = 0);

std::string reputation_series_to_json(const ReputationSeries& s);

}  // namespace madda
