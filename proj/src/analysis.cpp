#include "setsim/analysis.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include "setsim/error.hpp"
#include "setsim/runner.hpp"
#include "setsim/scoring.hpp"

namespace setsim {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double bundle_value(const ResourceVector& v, const ExperimentConfig& cfg, ValueUnit unit) {
    if (unit == ValueUnit::Units) return static_cast<double>(v.total());
    return static_cast<double>(holding_value(v, cfg.value_coefficients).total_points);
}

// Units (or points) delivered from one agent to another in round r.
double delivered_between(const LogView& log, int round, AgentId from, AgentId to, ValueUnit unit) {
    const auto& delivered = log.outcomes.at(static_cast<std::size_t>(round - 1)).delivered;
    const auto it = delivered.find({from, to});
    return it == delivered.end() ? 0.0 : bundle_value(it->second, log.config, unit);
}

double mean(const std::vector<double>& v) {
    return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_sd(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean(v);
    double ss = 0.0;
    for (const double x : v) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::ConfigError, "cannot write " + path.string());
    out << text;
}

}  // namespace

LogView log_view_from_events(const std::vector<EventRecord>& events) {
    LogView view;
    bool started = false;
    for (const auto& e : events) {
        const auto& p = e.payload;
        if (!started && e.kind != EventKind::RunStart) fail(ErrorCode::CorruptLog, "log does not begin with run_start");
        switch (e.kind) {
            case EventKind::RunStart:
                view.config = config_from_json(p.at("config"));
                view.run_id = e.run_id;
                view.repetition_index = e.repetition_index;
                view.affinity.push_back(AffinityLedger(view.config.agents.size()));
                started = true;
                break;
            case EventKind::Injection:
                view.holdings_during_negotiation.resize(static_cast<std::size_t>(e.round));
                view.holdings_during_negotiation[e.round - 1] = holdings_from_json(p.at("holdings_after"), view.config);
                break;
            case EventKind::NegotiationClosed: {
                view.proposals.resize(static_cast<std::size_t>(e.round));
                auto& list = view.proposals[e.round - 1];
                for (const auto& j : p.at("proposals")) list.push_back(proposal_from_json(j, view.config));
                break;
            }
            case EventKind::ExchangeResolved: {
                RoundOutcome o;
                o.round = e.round;
                o.promised = ledger_from_json(p.at("promised"), view.config);
                o.delivered = ledger_from_json(p.at("delivered"), view.config);
                for (const auto& b : p.at("breaches")) {
                    BreachRecord r;
                    r.round = o.round;
                    r.debtor = view.config.agent_by_name(b.at("debtor").get<std::string>());
                    r.creditor = view.config.agent_by_name(b.at("creditor").get<std::string>());
                    r.promised = resources_from_json(b.at("promised"), view.config);
                    r.delivered = resources_from_json(b.at("delivered"), view.config);
                    r.signed_breach = b.at("signed_breach").get<std::int64_t>();
                    o.breaches.push_back(std::move(r));
                }
                if (p.contains("holdings_after")) o.holdings_after = holdings_from_json(p.at("holdings_after"), view.config);
                view.outcomes.resize(static_cast<std::size_t>(e.round));
                view.outcomes[e.round - 1] = std::move(o);
                view.rounds = std::max(view.rounds, e.round);
                break;
            }
            case EventKind::AffinityUpdate: {
                if (!started) break;
                // Snapshots are per round; start from the previous round's.
                while (static_cast<int>(view.affinity.size()) <= e.round) view.affinity.push_back(view.affinity.back());
                const auto owner = view.config.agent_by_name(p.at("agent").get<std::string>());
                for (const auto& [name, score] : p.at("scores").items()) {
                    view.affinity[e.round].set(owner, view.config.agent_by_name(name), score.get<int>());
                }
                break;
            }
            default:
                break;
        }
    }
    if (!started) fail(ErrorCode::CorruptLog, "log has no run_start");
    while (static_cast<int>(view.affinity.size()) <= view.rounds) view.affinity.push_back(view.affinity.back());
    view.outcomes.resize(static_cast<std::size_t>(view.rounds));
    for (int r = 1; r <= view.rounds; ++r) {
        if (view.outcomes[r - 1].round == 0) fail(ErrorCode::CorruptLog, "round " + std::to_string(r) + " has no exchange_resolved");
    }
    return view;
}

LogView load_log_view(const std::string& path, bool validate) {
    if (validate) replay_log(path);
    const auto log = read_event_log(path);
    if (!log.error.empty()) fail(ErrorCode::CorruptLog, log.error + "; last valid seq " + std::to_string(log.last_valid_seq));
    return log_view_from_events(log.events);
}

std::vector<std::vector<double>> exchange_value_series(const LogView& log, ExchangeOptions options) {
    const auto m = log.config.agents.size();
    std::vector<std::vector<double>> series(m, std::vector<double>(static_cast<std::size_t>(log.rounds), 0.0));
    for (int r = 1; r <= log.rounds; ++r) {
        for (const auto& [key, units] : log.outcomes[r - 1].delivered) {
            const double v = bundle_value(units, log.config, options.unit);
            series[key.first.index()][r - 1] += v;
            if (options.mode == ExchangeMode::DeliveredPlusReceived) series[key.second.index()][r - 1] += v;
        }
    }
    return series;
}

std::vector<std::vector<double>> affinity_received_series(const LogView& log) {
    const auto m = log.config.agents.size();
    std::vector<std::vector<double>> series(m);
    for (std::uint32_t a = 0; a < m; ++a) {
        for (int r = 0; r <= log.rounds; ++r) series[a].push_back(log.affinity.at(static_cast<std::size_t>(r)).mean_received(AgentId{a}));
    }
    return series;
}

PhaseSegmentation default_segmentation(int rounds) {
    if (rounds < 3) fail(ErrorCode::ConfigError, "phase segmentation needs at least 3 rounds");
    const int edge = std::max(1, static_cast<int>(std::lround(rounds * 0.2)));
    return PhaseSegmentation{{{{1, edge}, {edge + 1, rounds - edge}, {rounds - edge + 1, rounds}}}};
}

void check_segmentation(const PhaseSegmentation& seg, int rounds) {
    int next = 1;
    for (const auto& [first, last] : seg.ranges) {
        if (first != next || last < first) fail(ErrorCode::ConfigError, "phase ranges must partition 1..T in order");
        next = last + 1;
    }
    if (next != rounds + 1) fail(ErrorCode::ConfigError, "phase ranges must end at round T");
}

double lower_median(std::vector<double> values) {
    if (values.empty()) fail(ErrorCode::InsufficientData, "median of no values");
    std::sort(values.begin(), values.end());
    return values[(values.size() - 1) / 2];
}

PhaseMedians phase_medians(const std::vector<LogView>& logs, const PhaseSegmentation& seg, ExchangeOptions options) {
    if (logs.empty()) fail(ErrorCode::InsufficientData, "no logs");
    std::array<std::vector<double>, 3> pools;
    for (const auto& log : logs) {
        check_segmentation(seg, log.rounds);
        const auto series = exchange_value_series(log, options);
        for (std::size_t ph = 0; ph < 3; ++ph) {
            for (int r = seg.ranges[ph].first; r <= seg.ranges[ph].second; ++r) {
                for (const auto& agent : series) pools[ph].push_back(agent[r - 1]);
            }
        }
    }
    PhaseMedians out;
    for (std::size_t ph = 0; ph < 3; ++ph) {
        out.samples[ph] = pools[ph].size();
        out.median[ph] = lower_median(pools[ph]);
    }
    return out;
}

std::vector<AbundanceSample> abundance_samples(const std::vector<LogView>& logs) {
    std::vector<AbundanceSample> samples;
    for (const auto& log : logs) {
        for (std::size_t r = 0; r < log.proposals.size(); ++r) {
            if (r >= log.holdings_during_negotiation.size()) break;
            for (const auto& p : log.proposals[r]) {
                if (p.give.is_zero()) continue;
                const auto& h = log.holdings_during_negotiation[r].at(p.counterpart.index());
                const double mean_holding = static_cast<double>(h.total()) / static_cast<double>(h.size());
                if (mean_holding <= 0.0) continue;
                double weighted = 0.0;
                for (ResourceType t = 0; t < p.give.size(); ++t) {
                    weighted += static_cast<double>(p.give[t]) * (static_cast<double>(h[t]) / mean_holding);
                }
                samples.push_back({weighted / static_cast<double>(p.give.total()), p.status, p.proposal_id, log.run_id});
            }
        }
    }
    return samples;
}

AbundanceAcceptance abundance_acceptance(const std::vector<AbundanceSample>& input, AcceptanceOptions options) {
    // Expired offers always take part in the ranking so the quartile edges do
    // not move with the option; it only changes the denominator.
    std::vector<AbundanceSample> samples = input;
    std::vector<double> distinct;
    for (const auto& s : samples) distinct.push_back(s.ratio);
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    if (distinct.size() < 4) {
        fail(ErrorCode::InsufficientData, "abundance quartiles need at least 4 distinct ratios, got " + std::to_string(distinct.size()));
    }
    std::stable_sort(samples.begin(), samples.end(), [](const auto& a, const auto& b) { return a.ratio < b.ratio; });

    AbundanceAcceptance out;
    for (auto& b : out.buckets) {
        b.min_ratio = kNaN;
        b.max_ratio = kNaN;
    }
    const auto n = samples.size();
    std::size_t first_rank = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (i > 0 && samples[i].ratio != samples[i - 1].ratio) first_rank = i;
        auto& b = out.buckets[4 * first_rank / n];
        if (std::isnan(b.min_ratio)) b.min_ratio = samples[i].ratio;
        b.max_ratio = samples[i].ratio;
        switch (samples[i].status) {
            case ProposalStatus::Accepted: ++b.accepted; break;
            case ProposalStatus::Rejected: ++b.rejected; break;
            case ProposalStatus::Expired: ++b.expired; break;
            case ProposalStatus::Pending: break;
        }
    }
    for (auto& b : out.buckets) {
        const auto denom = b.accepted + b.rejected + (options.include_expired ? b.expired : 0);
        b.rate_percent = denom == 0 ? kNaN : 100.0 * static_cast<double>(b.accepted) / static_cast<double>(denom);
    }
    out.samples = std::move(samples);
    return out;
}

AbundanceAcceptance abundance_acceptance(const std::vector<LogView>& logs, AcceptanceOptions options) {
    return abundance_acceptance(abundance_samples(logs), options);
}

std::vector<BreachResponseBucket> breach_response(const std::vector<LogView>& logs, BreachResponseOptions options) {
    if (options.window < 1) fail(ErrorCode::ConfigError, "breach response window must be >= 1");
    std::vector<BreachResponseBucket> out;
    std::vector<std::vector<double>> changes(options.buckets.size());
    for (const auto& spec : options.buckets) out.push_back({spec, 0, kNaN});
    std::size_t total = 0;
    for (const auto& log : logs) {
        for (const auto& outcome : log.outcomes) {
            for (const auto& b : outcome.breaches) {
                if (b.signed_breach <= 0) continue;
                const int later = outcome.round + options.window;
                if (later > log.rounds) continue;
                const double before = delivered_between(log, outcome.round, b.creditor, b.debtor, ValueUnit::Units);
                if (before == 0.0) continue;
                const double after = delivered_between(log, later, b.creditor, b.debtor, ValueUnit::Units);
                const auto breach = static_cast<double>(b.signed_breach);
                for (std::size_t k = 0; k < options.buckets.size(); ++k) {
                    if (breach > options.buckets[k].lower && breach <= options.buckets[k].upper) {
                        changes[k].push_back((after - before) / before * 100.0);
                        ++total;
                        break;
                    }
                }
            }
        }
    }
    if (total == 0) fail(ErrorCode::InsufficientData, "no positive breach with a nonzero reciprocal delivery");
    for (std::size_t k = 0; k < out.size(); ++k) {
        out[k].samples = changes[k].size();
        if (!changes[k].empty()) out[k].mean_change_percent = mean(changes[k]);
    }
    return out;
}

GroupStats summarize_group(const std::string& group, const std::vector<std::vector<double>>& values_per_repetition) {
    GroupStats g;
    g.group = group;
    std::vector<double> pooled;
    std::vector<double> rep_means;
    for (const auto& rep : values_per_repetition) {
        if (rep.empty()) continue;
        pooled.insert(pooled.end(), rep.begin(), rep.end());
        rep_means.push_back(mean(rep));
    }
    if (pooled.empty()) fail(ErrorCode::InsufficientData, "group " + group + " has no values");
    g.n = pooled.size();
    g.mean = mean(pooled);
    g.sd = sample_sd(pooled);
    g.single_sample = g.n == 1;
    g.repetitions = rep_means.size();
    g.se = rep_means.size() < 2 ? 0.0 : sample_sd(rep_means) / std::sqrt(static_cast<double>(rep_means.size()));
    return g;
}

SvoOutcomes svo_outcome_stats(const std::vector<LogView>& logs) {
    if (logs.empty()) fail(ErrorCode::InsufficientData, "no logs");
    SvoOutcomes out;
    std::map<std::string, std::vector<std::vector<double>>> groups;
    for (const auto& log : logs) {
        std::map<std::string, std::vector<double>> per_log;
        const auto& final_holdings = log.outcomes.empty() ? Holdings{} : log.outcomes.back().holdings_after;
        for (const auto& a : log.config.agents) {
            const auto& h = final_holdings.empty() ? a.initial_holdings : final_holdings.at(a.agent_id.index());
            per_log[to_string(a.svo)].push_back(static_cast<double>(holding_value(h, log.config.value_coefficients).total_points));
        }
        for (auto& [name, values] : per_log) groups[name].push_back(std::move(values));
        for (const auto& o : log.outcomes) {
            for (const auto& b : o.breaches) {
                out.breaches.push_back({to_string(log.config.agent(b.debtor).svo), log.run_id, log.repetition_index, o.round,
                                        log.config.agent(b.debtor).display_name, log.config.agent(b.creditor).display_name,
                                        b.signed_breach, to_string(b.delivery_class())});
            }
        }
    }
    for (const auto* name : {"prosocial", "proself"}) {
        if (const auto it = groups.find(name); it != groups.end()) out.groups.push_back(summarize_group(name, it->second));
    }
    return out;
}

std::string format_number(double v) {
    if (std::isnan(v)) return "NA";
    if (v == 0.0) return "0";  // folds -0
    char buf[64];
    const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return ec == std::errc{} ? std::string(buf, end) : "NA";
}

std::string csv_field(const std::string& text) {
    if (text.find_first_of(",\"\n\r") == std::string::npos) return text;
    std::string out = "\"";
    for (const char c : text) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::string write_analysis(const std::vector<LogView>& logs, const std::string& out_dir, const AnalysisOptions& options) {
    namespace fs = std::filesystem;
    if (logs.empty()) fail(ErrorCode::InsufficientData, "no logs to analyze");
    fs::create_directories(out_dir);
    const fs::path dir(out_dir);
    std::ostringstream summary;
    summary << "logs analyzed: " << logs.size() << "\n";
    summary << "exchange value: " << (options.exchange.mode == ExchangeMode::DeliveredOut ? "delivered out" : "delivered plus received")
            << ", " << (options.exchange.unit == ValueUnit::Units ? "units" : "points") << "\n";

    std::ostringstream ev("run_id,repetition,agent,round,value\n", std::ios::ate);
    std::ostringstream af("run_id,repetition,agent,round,mean_received\n", std::ios::ate);
    for (const auto& log : logs) {
        const auto series = exchange_value_series(log, options.exchange);
        const auto received = affinity_received_series(log);
        for (std::size_t a = 0; a < series.size(); ++a) {
            const auto& name = log.config.agents[a].display_name;
            for (std::size_t r = 0; r < series[a].size(); ++r) {
                ev << csv_field(log.run_id) << ',' << log.repetition_index << ',' << csv_field(name) << ',' << r + 1 << ','
                   << format_number(series[a][r]) << '\n';
            }
            for (std::size_t r = 0; r < received[a].size(); ++r) {
                af << csv_field(log.run_id) << ',' << log.repetition_index << ',' << csv_field(name) << ',' << r << ','
                   << format_number(received[a][r]) << '\n';
            }
        }
    }
    write_file(dir / "exchange_value.csv", ev.str());
    write_file(dir / "affinity_received.csv", af.str());

    std::ostringstream pm("phase,first_round,last_round,samples,median\n", std::ios::ate);
    try {
        const auto seg = options.segmentation ? *options.segmentation : default_segmentation(logs.front().rounds);
        const auto medians = phase_medians(logs, seg, options.exchange);
        summary << "phase medians:";
        for (std::size_t ph = 0; ph < 3; ++ph) {
            pm << kPhaseNames[ph] << ',' << seg.ranges[ph].first << ',' << seg.ranges[ph].second << ',' << medians.samples[ph]
               << ',' << format_number(medians.median[ph]) << '\n';
            summary << ' ' << kPhaseNames[ph] << ' ' << format_number(medians.median[ph]);
        }
        summary << "\n";
    } catch (const Error& e) {
        summary << "phase medians: not computed (" << e.what() << ")\n";
    }
    write_file(dir / "phase_medians.csv", pm.str());

    std::ostringstream aa("quartile,min_ratio,max_ratio,accepted,rejected,expired,rate_percent\n", std::ios::ate);
    try {
        const auto acc = abundance_acceptance(logs, options.acceptance);
        summary << "acceptance by abundance (%):";
        for (std::size_t q = 0; q < 4; ++q) {
            const auto& b = acc.buckets[q];
            aa << kQuartileNames[q] << ',' << format_number(b.min_ratio) << ',' << format_number(b.max_ratio) << ','
               << b.accepted << ',' << b.rejected << ',' << b.expired << ',' << format_number(b.rate_percent) << '\n';
            summary << ' ' << kQuartileNames[q] << ' ' << format_number(b.rate_percent);
        }
        summary << " (" << acc.samples.size() << " proposals, expired "
                << (options.acceptance.include_expired ? "counted" : "excluded") << ")\n";
    } catch (const Error& e) {
        summary << "acceptance by abundance: not computed (" << e.what() << ")\n";
    }
    write_file(dir / "abundance_acceptance.csv", aa.str());

    std::ostringstream br("breach_lower,breach_upper,samples,mean_change_percent\n", std::ios::ate);
    try {
        const auto buckets = breach_response(logs, options.breach);
        summary << "breach response (window " << options.breach.window << "):";
        for (const auto& b : buckets) {
            br << format_number(b.range.lower) << ',' << format_number(b.range.upper) << ',' << b.samples << ','
               << format_number(b.mean_change_percent) << '\n';
            summary << " (" << format_number(b.range.lower) << "," << format_number(b.range.upper) << "] "
                    << format_number(b.mean_change_percent) << (std::isnan(b.mean_change_percent) ? "" : "%")
                    << " n=" << b.samples;
        }
        summary << "\n";
    } catch (const Error& e) {
        summary << "breach response: not computed (" << e.what() << ")\n";
    }
    write_file(dir / "breach_response.csv", br.str());

    std::ostringstream so("group,n,mean,sd,se,repetitions,single_sample\n", std::ios::ate);
    std::ostringstream bs("group,run_id,repetition,round,debtor,creditor,signed_breach,class\n", std::ios::ate);
    const auto svo = svo_outcome_stats(logs);
    for (const auto& g : svo.groups) {
        so << g.group << ',' << g.n << ',' << format_number(g.mean) << ',' << format_number(g.sd) << ',' << format_number(g.se)
           << ',' << g.repetitions << ',' << (g.single_sample ? "true" : "false") << '\n';
        summary << "final value " << g.group << ": mean " << format_number(g.mean) << ", sd " << format_number(g.sd)
                << ", se " << format_number(g.se) << ", n " << g.n << "\n";
    }
    for (const auto& b : svo.breaches) {
        bs << b.group << ',' << csv_field(b.run_id) << ',' << b.repetition_index << ',' << b.round << ',' << csv_field(b.debtor)
           << ',' << csv_field(b.creditor) << ',' << b.signed_breach << ',' << b.delivery_class << '\n';
    }
    write_file(dir / "svo_outcomes.csv", so.str());
    write_file(dir / "breach_scatter.csv", bs.str());
    write_file(dir / "summary.txt", summary.str());
    return summary.str();
}

}  // namespace setsim
