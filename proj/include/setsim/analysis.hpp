#pragma once

#include <array>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "setsim/events.hpp"
#include "setsim/exchange.hpp"

namespace setsim {

// What the metrics need from one repetition log. Built leniently from events
// (run_start config plus whichever round events exist), so hand-made
// fixture logs need only the events they exercise.
struct LogView {
    ExperimentConfig config;
    std::string run_id;
    int repetition_index{0};
    int rounds{0};
    std::vector<RoundOutcome> outcomes;                 // [r-1]
    std::vector<std::vector<Proposal>> proposals;       // [r-1], statuses at phase close
    std::vector<Holdings> holdings_during_negotiation;  // [r-1], after injection
    std::vector<AffinityLedger> affinity;               // [0] initial, [r] after round r
};

LogView log_view_from_events(const std::vector<EventRecord>& events);
// validate: run the full replay check first (CorruptLog, SchemaMismatch).
LogView load_log_view(const std::string& path, bool validate = true);

enum class ExchangeMode { DeliveredOut, DeliveredPlusReceived };
enum class ValueUnit { Units, Points };

struct ExchangeOptions {
    ExchangeMode mode{ExchangeMode::DeliveredOut};
    ValueUnit unit{ValueUnit::Units};
};

// [agent][r-1]
std::vector<std::vector<double>> exchange_value_series(const LogView& log, ExchangeOptions options = {});

// [agent][r], r = 0 is the initial ledger.
std::vector<std::vector<double>> affinity_received_series(const LogView& log);

struct PhaseSegmentation {
    std::array<std::pair<int, int>, 3> ranges;  // inclusive, Initial / Thriving / Endgame
};

inline constexpr std::array<const char*, 3> kPhaseNames{"initial", "thriving", "endgame"};

// T = 10: 1-2, 3-8, 9-10. Otherwise the same 20/60/20 proportions, each
// phase at least one round. Needs T >= 3 (ConfigError).
PhaseSegmentation default_segmentation(int rounds);
// ConfigError unless the ranges partition 1..T in order.
void check_segmentation(const PhaseSegmentation& seg, int rounds);

// Lower median of the sorted values (index (n-1)/2). InsufficientData when empty.
double lower_median(std::vector<double> values);

struct PhaseMedians {
    std::array<double, 3> median{};
    std::array<std::size_t, 3> samples{};
};

// Pools every agent-round exchange value within each phase across logs.
PhaseMedians phase_medians(const std::vector<LogView>& logs, const PhaseSegmentation& seg, ExchangeOptions options = {});

struct AcceptanceOptions {
    // true: expired proposals count as not accepted. false: they leave the
    // denominator but still take part in the quartile ranking.
    bool include_expired{true};
};

struct AbundanceSample {
    double ratio{0.0};
    ProposalStatus status{ProposalStatus::Pending};
    std::string proposal_id;
    std::string run_id;
};

struct AcceptanceBucket {
    double min_ratio{0.0};
    double max_ratio{0.0};
    std::size_t accepted{0};
    std::size_t rejected{0};
    std::size_t expired{0};
    double rate_percent{0.0};  // NaN when the denominator is empty
};

struct AbundanceAcceptance {
    std::array<AcceptanceBucket, 4> buckets;  // Scarce, Low, High, Abundant
    std::vector<AbundanceSample> samples;
};

inline constexpr std::array<const char*, 4> kQuartileNames{"scarce", "low", "high", "abundant"};

// Ratio = recipient's holding of the offered type over the recipient's mean
// holding across types, at the time of the offer. Multi-type offers use the
// unit-weighted mean over the give leg. Offers with an empty give leg or a
// recipient holding nothing are skipped.
std::vector<AbundanceSample> abundance_samples(const std::vector<LogView>& logs);

// Rank-based quartiles: sample at rank i of n goes to bucket floor(4i/n);
// tied ratios all take the bucket of their first rank. InsufficientData
// with fewer than 4 distinct ratios.
AbundanceAcceptance abundance_acceptance(const std::vector<AbundanceSample>& samples, AcceptanceOptions options = {});
AbundanceAcceptance abundance_acceptance(const std::vector<LogView>& logs, AcceptanceOptions options = {});

struct BreachBucketSpec {
    double lower{0.0};  // exclusive
    double upper{0.0};  // inclusive
};

struct BreachResponseOptions {
    std::vector<BreachBucketSpec> buckets{{0, 5}, {5, 10}, {10, 15}};
    int window{1};
};

struct BreachResponseBucket {
    BreachBucketSpec range;
    std::size_t samples{0};
    double mean_change_percent{0.0};  // NaN when empty
};

// For every positive breach d -> c in round r with V = units c delivered to
// d: change = (V(r + window) - V(r)) / V(r) * 100. Pairs with V(r) = 0 or
// r + window > T are skipped. InsufficientData when nothing qualifies.
std::vector<BreachResponseBucket> breach_response(const std::vector<LogView>& logs, BreachResponseOptions options = {});

struct GroupStats {
    std::string group;
    std::size_t n{0};
    double mean{0.0};
    double sd{0.0};  // sample standard deviation, 0 when n = 1
    bool single_sample{false};
    double se{0.0};  // standard error across repetition means
    std::size_t repetitions{0};
};

struct BreachPoint {
    std::string group;
    std::string run_id;
    int repetition_index{0};
    int round{0};
    std::string debtor;
    std::string creditor;
    std::int64_t signed_breach{0};
    std::string delivery_class;
};

struct SvoOutcomes {
    std::vector<GroupStats> groups;  // "prosocial", "proself"; absent groups omitted
    std::vector<BreachPoint> breaches;
};

// Groups agents by their social value orientation. Final holding values are
// pooled per group. Breach scatter rows come from the debtor's group.
// InsufficientData when no log is given.
SvoOutcomes svo_outcome_stats(const std::vector<LogView>& logs);

GroupStats summarize_group(const std::string& group, const std::vector<std::vector<double>>& values_per_repetition);

struct AnalysisOptions {
    ExchangeOptions exchange;
    AcceptanceOptions acceptance;
    BreachResponseOptions breach;
    std::optional<PhaseSegmentation> segmentation;
};

// Writes exchange_value.csv, affinity_received.csv, phase_medians.csv,
// abundance_acceptance.csv, breach_response.csv, svo_outcomes.csv,
// breach_scatter.csv and summary.txt. Metrics lacking data keep their
// header and are noted in the summary. Returns the summary text.
std::string write_analysis(const std::vector<LogView>& logs, const std::string& out_dir, const AnalysisOptions& options = {});

std::string format_number(double v);
std::string csv_field(const std::string& text);

}  // namespace setsim
